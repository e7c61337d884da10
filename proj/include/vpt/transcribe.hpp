// transcribe.hpp -- full-video sliding-window inference and post-processing:
// temporal Gaussian smoothing, thresholding, and run-midpoint onset extraction.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vpt/labels.hpp"
#include "vpt/midi.hpp"
#include "vpt/model.hpp"
#include "vpt/pipeline.hpp"
#include "vpt/util.hpp"
#include "vpt/video_io.hpp"

namespace vpt {

// Column c holds the 88 key activations attributed to source frame
// first_frame + c.
struct ActivationMatrix {
    Mat<float> values;  // 88 x F, entries in [0,1]
    int first_frame = 0;
    double fps = 30.0;

    long cols() const { return values.cols(); }
};

using BinMat = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Slide a 16-frame window over the whole video (stride 1); the prediction for
// window start s is attributed to frame s+8, so column 0 maps to frame 8.
// All frame_count-16+1 windows are evaluated; drop_last trims the final
// fencepost column for compatibility with an F = frame_count-16 convention.
inline ActivationMatrix sliding_predict(const VideoManifest& m, const BoundingBox& box,
                                        const ModelParams<float>& params,
                                        const PreprocSettings& ps, int threads = 1,
                                        bool drop_last = false, int batch_size = 16) {
    params.cfg.validate();
    ps.validate();
    if (params.cfg.frames != kWindowLen)
        fail("sliding inference expects a ", kWindowLen, "-frame model");
    if (ps.target != params.cfg.res || ps.channels() != params.cfg.channels)
        fail("preprocessing (", ps.target, "px, ", ps.channels(),
             "ch) does not match the model (", params.cfg.res, "px, ", params.cfg.channels, "ch)");
    if (m.frame_count < kWindowLen) fail("video too short: ", m.frame_count, " frames < ", kWindowLen);
    if (batch_size < 1) fail("batch size must be >= 1");

    long f = m.frame_count - kWindowLen + 1;
    if (drop_last) f -= 1;
    if (f < 1) fail("video too short: no full window with the last one dropped");

    FrameCache cache = build_frame_cache(m, box, ps, threads);

    ActivationMatrix act;
    act.values.resize(kHeads88, f);
    act.first_frame = kWindowLen / 2;
    act.fps = m.fps;

    for (long s0 = 0; s0 < f; s0 += batch_size) {
        int n = static_cast<int>(std::min<long>(batch_size, f - s0));
        ClipBatch<float> batch = ClipBatch<float>::make(params.cfg, n);
        for (int i = 0; i < n; ++i)
            fill_clip_from_cache(cache, static_cast<int>(s0) + i, batch, i);
        Mat<float> pred = forward(params, batch, threads);  // n x 88
        for (int i = 0; i < n; ++i) act.values.col(s0 + i) = pred.row(i).transpose();
    }
    return act;
}

// Normalized discrete Gaussian, weights proportional to exp(-k^2 / 2 sigma^2)
// for k in [-radius, radius], scaled to sum exactly 1 over the support.
inline std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (sigma <= 0) fail("sigma must be > 0");
    if (radius < 0) fail("radius must be >= 0");
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        double v = std::exp(-0.5 * (static_cast<double>(k) * k) / (sigma * sigma));
        w[static_cast<std::size_t>(k + radius)] = v;
        sum += v;
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Mirror an out-of-range column index back into [0, n): -1 -> 0, n -> n-1.
inline long reflect_index(long i, long n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Convolve each key row with the Gaussian along time, reflect padding at both
// ends. Accumulation runs in double over ascending k.
inline ActivationMatrix smooth_time(const ActivationMatrix& act, double sigma = 1.0,
                                    int radius = 16, int threads = 1) {
    long f = act.values.cols();
    if (f < 1) fail("empty activation matrix");
    std::vector<double> kernel = gaussian_kernel(sigma, radius);

    ActivationMatrix out;
    out.first_frame = act.first_frame;
    out.fps = act.fps;
    out.values.resize(act.values.rows(), f);
    parallel_for(act.values.rows(), threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t key = lo; key < hi; ++key) {
            for (long c = 0; c < f; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[static_cast<std::size_t>(k + radius)] *
                           static_cast<double>(act.values(key, reflect_index(c + k, f)));
                out.values(key, c) = static_cast<float>(std::min(1.0, std::max(0.0, acc)));
            }
        }
    });
    return out;
}

// Threshold is inclusive: a value of exactly 0.5 counts as active.
inline BinMat binarize(const ActivationMatrix& act, float threshold = 0.5f) {
    BinMat out(act.values.rows(), act.values.cols());
    for (long r = 0; r < out.rows(); ++r)
        for (long c = 0; c < out.cols(); ++c)
            out(r, c) = act.values(r, c) >= threshold ? 1 : 0;
    return out;
}

// Each maximal run of 1s in a key row becomes one onset at the run's middle
// column (floor midpoint for even runs), mapped back to source frame time.
inline std::vector<NoteEvent> extract_notes(const BinMat& binary, int first_frame, double fps) {
    if (binary.rows() != kHeads88) fail("binary matrix must have 88 rows");
    if (fps <= 0) fail("fps must be > 0");
    std::vector<NoteEvent> notes;
    for (int key = 0; key < kHeads88; ++key) {
        long c = 0;
        while (c < binary.cols()) {
            if (!binary(key, c)) {
                ++c;
                continue;
            }
            long start = c;
            while (c < binary.cols() && binary(key, c)) ++c;
            long end = c - 1;  // inclusive
            long mid = (start + end) / 2;
            notes.push_back({static_cast<double>(first_frame + mid) / fps, kPitchLow + key});
        }
    }
    std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
        return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
    });
    return notes;
}

// The whole post-processing chain behind one call.
inline std::vector<NoteEvent> postprocess(const ActivationMatrix& act, double sigma = 1.0,
                                          int radius = 16, float threshold = 0.5f,
                                          int threads = 1) {
    ActivationMatrix smoothed = smooth_time(act, sigma, radius, threads);
    return extract_notes(binarize(smoothed, threshold), smoothed.first_frame, smoothed.fps);
}

}  // namespace vpt
