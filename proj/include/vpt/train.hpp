// train.hpp -- window dataset assembly (labels, culling, shuffling) and the
// AdamW training loop with scheduled learning rate and periodic checkpoints.
#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <vector>

#include "vpt/checkpoint.hpp"
#include "vpt/keyboard_region.hpp"
#include "vpt/labels.hpp"
#include "vpt/midi.hpp"
#include "vpt/model.hpp"
#include "vpt/optimizer.hpp"
#include "vpt/pipeline.hpp"
#include "vpt/util.hpp"
#include "vpt/video_io.hpp"

namespace vpt {

struct TrainVideo {
    std::filesystem::path manifest, detections, midi;
};

struct TrainConfig {
    ModelConfig model;
    PreprocSettings preproc;
    double class_weight = 1.0;
    double base_lr = 6.25e-5;
    double weight_decay = 0.05;
    double warmup_frac = 0.05;
    long steps = 1000;
    int batch_size = 16;
    double cull_keep = 0.05;  // survival probability of all-zero windows
    int jitter_lo = 0, jitter_hi = 0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    long checkpoint_every = 0;  // 0 = final checkpoint only
    std::filesystem::path checkpoint_path;
    std::filesystem::path metrics_csv;  // empty = no CSV

    void validate() const {
        model.validate();
        preproc.validate();
        if (model.frames != kWindowLen)
            fail("training expects ", kWindowLen, "-frame windows, model wants ", model.frames);
        if (model.res != preproc.target)
            fail("model resolution ", model.res, " != fit target ", preproc.target);
        if (model.channels != preproc.channels())
            fail("model channels ", model.channels, " != preprocessing channels ", preproc.channels());
        if (class_weight < 1.0) fail("class weight must be >= 1");
        if (base_lr <= 0) fail("base learning rate must be > 0");
        if (steps < 1) fail("steps must be >= 1");
        if (batch_size < 1) fail("batch size must be >= 1");
        if (cull_keep < 0 || cull_keep > 1) fail("cull keep fraction must be in [0, 1]");
        if (jitter_lo > jitter_hi) fail("jitter range is empty");
        if (noise_sigma < 0) fail("noise sigma must be >= 0");
        if (checkpoint_path.empty()) fail("checkpoint path is required");
    }
};

struct TrainResult {
    long steps_run = 0;
    float final_loss = 0.f;
    std::size_t dataset_size = 0;
    std::filesystem::path checkpoint_path;
};

namespace train_detail {

struct Sample {
    int video;
    int start;
    WindowLabel label;
};

struct LoadedVideo {
    VideoManifest manifest;
    BoundingBox box;
    FrameCache cache;                // used when jitter is off
    std::vector<ImageU8> raw_frames; // used when jitter is on
};

}  // namespace train_detail

inline TrainResult train(const TrainConfig& cfg, const std::vector<TrainVideo>& videos,
                         std::ostream* progress = nullptr) {
    using train_detail::LoadedVideo;
    using train_detail::Sample;
    cfg.validate();
    if (videos.empty()) fail("no training videos given");
    const bool jitter_on = cfg.jitter_lo != 0 || cfg.jitter_hi != 0;

    std::vector<LoadedVideo> loaded;
    std::vector<Sample> samples;
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
        LoadedVideo lv;
        lv.manifest = read_manifest(videos[vi].manifest);
        lv.box = select_box(load_detections(videos[vi].detections));
        SmfData smf = parse_smf(read_binary_file(videos[vi].midi));
        FrameOnsetMap map = onsets_to_frames(smf.notes, lv.manifest.fps);

        WindowPlan plan = iter_windows(lv.manifest, kWindowLen, 1);
        if (plan.input_too_short && progress)
            (*progress) << "warning: " << videos[vi].manifest.string() << " has "
                        << lv.manifest.frame_count << " frames, shorter than one window\n";
        for (const auto& win : plan.windows)
            samples.push_back(
                {static_cast<int>(vi), win.origin_frame, window_label(map, win.origin_frame)});

        if (jitter_on) {
            lv.raw_frames.reserve(static_cast<std::size_t>(lv.manifest.frame_count));
            for (int f = 0; f < lv.manifest.frame_count; ++f)
                lv.raw_frames.push_back(read_frame(lv.manifest, f));
        } else {
            lv.cache = build_frame_cache(lv.manifest, lv.box, cfg.preproc, cfg.threads);
        }
        loaded.push_back(std::move(lv));
    }

    Rng cull_rng(sub_seed(cfg.seed, "cull"));
    samples = cull_empty(samples, cull_rng, cfg.cull_keep,
                         [](const Sample& s) -> const WindowLabel& { return s.label; });
    if (samples.empty()) fail("no training windows survive assembly");
    if (progress) (*progress) << "dataset: " << samples.size() << " windows\n";

    ModelParams<float> params = init_params<float>(cfg.model, cfg.seed);
    AdamState<float> state = AdamState<float>::make(cfg.model);
    Rng order_rng(sub_seed(cfg.seed, "order"));
    Rng aug_rng(sub_seed(cfg.seed, "jitter"));

    std::ofstream csv;
    if (!cfg.metrics_csv.empty()) {
        csv.open(cfg.metrics_csv, std::ios::trunc);
        if (!csv) fail("cannot write metrics CSV: ", cfg.metrics_csv.string());
        csv << "step,lr,loss\n";
    }

    const int bs = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(cfg.batch_size), samples.size()));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // trigger a shuffle on first use

    auto save = [&](const ModelParams<float>& p) {
        Checkpoint ckpt{p, preproc_to_meta(cfg.preproc)};
        save_checkpoint(cfg.checkpoint_path, ckpt);
    };

    TrainResult result;
    result.dataset_size = samples.size();
    ClipBatch<float> batch = ClipBatch<float>::make(cfg.model, bs);
    Mat<float> targets(bs, kHeads88);
    long report_every = std::max<long>(1, cfg.steps / 20);

    for (long step = 0; step < cfg.steps; ++step) {
        for (int i = 0; i < bs; ++i) {
            if (cursor + 1 > order.size()) {
                for (std::size_t j = order.size() - 1; j > 0; --j) {
                    auto k = static_cast<std::size_t>(
                        order_rng.uniform_int(0, static_cast<std::int64_t>(j)));
                    std::swap(order[j], order[k]);
                }
                cursor = 0;
            }
            const Sample& s = samples[order[cursor++]];
            LoadedVideo& lv = loaded[static_cast<std::size_t>(s.video)];
            if (jitter_on)
                fill_clip_augmented(lv.raw_frames, s.start, lv.box, cfg.preproc, batch, i,
                                    aug_rng, cfg.jitter_lo, cfg.jitter_hi, cfg.noise_sigma);
            else
                fill_clip_from_cache(lv.cache, s.start, batch, i, aug_rng, cfg.noise_sigma);
            for (int k = 0; k < kHeads88; ++k) targets(i, k) = s.label[static_cast<std::size_t>(k)];
        }

        double lr = lr_schedule(step, cfg.steps, cfg.warmup_frac, cfg.base_lr);
        BackpropResult<float> bp =
            grad(params, batch, targets, static_cast<float>(cfg.class_weight), cfg.threads);
        adamw_step(params, bp.grads, state, lr, cfg.weight_decay);

        result.final_loss = bp.loss;
        if (csv.is_open())
            csv << step << "," << std::setprecision(10) << lr << "," << bp.loss << "\n";
        if (progress && (step % report_every == 0 || step + 1 == cfg.steps))
            (*progress) << "step " << (step + 1) << "/" << cfg.steps << "  lr " << std::scientific
                        << std::setprecision(3) << lr << "  loss " << std::defaultfloat
                        << std::setprecision(5) << bp.loss << "\n";
        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
            step + 1 < cfg.steps)
            save(params);
    }

    save(params);
    result.steps_run = cfg.steps;
    result.checkpoint_path = cfg.checkpoint_path;
    return result;
}

}  // namespace vpt
