// vpt.hpp -- convenience umbrella for the whole library.
#pragma once

#include "vpt/checkpoint.hpp"
#include "vpt/image.hpp"
#include "vpt/keyboard_region.hpp"
#include "vpt/labels.hpp"
#include "vpt/metrics.hpp"
#include "vpt/midi.hpp"
#include "vpt/model.hpp"
#include "vpt/optimizer.hpp"
#include "vpt/pipeline.hpp"
#include "vpt/preprocess.hpp"
#include "vpt/rng.hpp"
#include "vpt/synth.hpp"
#include "vpt/train.hpp"
#include "vpt/transcribe.hpp"
#include "vpt/util.hpp"
#include "vpt/video_io.hpp"
