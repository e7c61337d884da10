// pipeline.hpp -- frame -> model-input plumbing shared by training and
// inference: crop, square fit, color handling, and clip assembly.
#pragma once

#include <map>
#include <vector>

#include "vpt/image.hpp"
#include "vpt/keyboard_region.hpp"
#include "vpt/model.hpp"
#include "vpt/preprocess.hpp"
#include "vpt/util.hpp"
#include "vpt/video_io.hpp"

namespace vpt {

struct PreprocSettings {
    FitMode fit;                // square-fit strategy
    bool grayscale = false;
    bool normalize = false;     // ImageNet RGB normalization
    int target = 224;           // square side; must equal the model's res

    int channels() const { return grayscale ? 1 : 3; }

    void validate() const {
        if (grayscale && normalize)
            fail("grayscale and RGB normalization are mutually exclusive");
        if (target < 2) fail("fit target must be >= 2");
    }
};

// One frame through the inference-time chain: crop (clamped if needed), 0..1
// float conversion, square fit, then grayscale or channel normalization.
inline ImageF preprocess_frame(const ImageU8& frame, const BoundingBox& box,
                               const PreprocSettings& ps) {
    ps.validate();
    ImageU8 cropped = crop_frame(frame, box);
    ImageF img = fit_square(to_float(cropped), ps.fit, ps.target);
    if (ps.grayscale) return to_grayscale(img);
    if (ps.normalize) return normalize_rgb(img);
    return img;
}

// Checkpoint metadata round-trip for the preprocessing settings, so inference
// never needs the training flags repeated.
inline std::map<std::string, std::string> preproc_to_meta(const PreprocSettings& ps) {
    return {
        {"fit", fit_to_string(ps.fit)},
        {"grayscale", ps.grayscale ? "1" : "0"},
        {"normalize", ps.normalize ? "1" : "0"},
    };
}

inline PreprocSettings preproc_from_meta(const std::map<std::string, std::string>& meta,
                                         int target) {
    PreprocSettings ps;
    ps.target = target;
    auto get = [&meta](const char* key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end()) fail("checkpoint metadata missing key '", key, "'");
        return it->second;
    };
    ps.fit = parse_fit(get("fit"));
    ps.grayscale = get("grayscale") == "1";
    ps.normalize = get("normalize") == "1";
    ps.validate();
    return ps;
}

// All frames of a video preprocessed once with a fixed box. ~4 KB per frame at
// the 32x32 grayscale desk configuration, so whole videos fit comfortably.
struct FrameCache {
    std::vector<ImageF> frames;
    int channels = 0;
    int target = 0;
};

inline FrameCache build_frame_cache(const VideoManifest& m, const BoundingBox& box,
                                    const PreprocSettings& ps, int threads = 1) {
    ps.validate();
    FrameCache cache;
    cache.channels = ps.channels();
    cache.target = ps.target;
    cache.frames.resize(static_cast<std::size_t>(m.frame_count));
    parallel_for(m.frame_count, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i)
            cache.frames[static_cast<std::size_t>(i)] =
                preprocess_frame(read_frame(m, static_cast<int>(i)), box, ps);
    });
    return cache;
}

// Copy 16 consecutive cached frames into one ClipBatch slot. Frames are stored
// H x W x C row-major, which is exactly the per-frame layout the model reads.
inline void fill_clip_from_cache(const FrameCache& cache, int start, ClipBatch<float>& batch,
                                 int slot) {
    long frame_len = static_cast<long>(batch.res) * batch.res * batch.channels;
    if (cache.target != batch.res || cache.channels != batch.channels)
        fail("frame cache shape does not match the model input");
    if (start < 0 || start + batch.frames > static_cast<int>(cache.frames.size()))
        fail("window [", start, ", ", start + batch.frames, ") outside the cached video");
    float* dst = batch.sample(slot);
    for (int f = 0; f < batch.frames; ++f) {
        const ImageF& img = cache.frames[static_cast<std::size_t>(start + f)];
        std::copy(img.v.begin(), img.v.end(), dst + static_cast<long>(f) * frame_len);
    }
}

// Cache path with per-sample Gaussian noise (training without jitter).
inline void fill_clip_from_cache(const FrameCache& cache, int start, ClipBatch<float>& batch,
                                 int slot, Rng& rng, double noise_sigma) {
    if (noise_sigma <= 0) {
        fill_clip_from_cache(cache, start, batch, slot);
        return;
    }
    if (cache.target != batch.res || cache.channels != batch.channels)
        fail("frame cache shape does not match the model input");
    if (start < 0 || start + batch.frames > static_cast<int>(cache.frames.size()))
        fail("window [", start, ", ", start + batch.frames, ") outside the cached video");
    long frame_len = static_cast<long>(batch.res) * batch.res * batch.channels;
    float* dst = batch.sample(slot);
    for (int f = 0; f < batch.frames; ++f) {
        ImageF img = add_noise(cache.frames[static_cast<std::size_t>(start + f)], rng, noise_sigma);
        std::copy(img.v.begin(), img.v.end(), dst + static_cast<long>(f) * frame_len);
    }
}

// Augmented variant: re-crop the window's raw frames with a per-sample
// jittered box, then optionally add Gaussian noise. Used only in training.
inline void fill_clip_augmented(const std::vector<ImageU8>& raw_frames, int start,
                                const BoundingBox& box, const PreprocSettings& ps,
                                ClipBatch<float>& batch, int slot, Rng& rng, int jitter_lo,
                                int jitter_hi, double noise_sigma) {
    if (start < 0 || start + batch.frames > static_cast<int>(raw_frames.size()))
        fail("window [", start, ", ", start + batch.frames, ") outside the video");
    const ImageU8& first = raw_frames[static_cast<std::size_t>(start)];
    BoundingBox use = box;
    if (jitter_lo != 0 || jitter_hi != 0)
        use = jitter_box(box, first.w, first.h, rng, jitter_lo, jitter_hi);
    long frame_len = static_cast<long>(batch.res) * batch.res * batch.channels;
    float* dst = batch.sample(slot);
    for (int f = 0; f < batch.frames; ++f) {
        ImageF img = preprocess_frame(raw_frames[static_cast<std::size_t>(start + f)], use, ps);
        if (noise_sigma > 0) img = add_noise(img, rng, noise_sigma);
        std::copy(img.v.begin(), img.v.end(), dst + static_cast<long>(f) * frame_len);
    }
}

}  // namespace vpt
