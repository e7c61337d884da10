// preprocess.hpp -- square-fit transforms, grayscale, normalization and the
// training-time augmentations.
//
// All functions are pure; augmentation randomness comes in through an explicit
// Rng. Images are float tensors in [0, 1] until normalize_rgb.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vpt/image.hpp"
#include "vpt/keyboard_region.hpp"
#include "vpt/rng.hpp"
#include "vpt/util.hpp"

namespace vpt {

enum class FitKind { Stretch, AspectMod, SplitStack, SplitStackStretch };

struct FitMode {
    FitKind kind = FitKind::Stretch;
    double factor = 4.3;  // AspectMod height multiplier
};

// CLI surface: stretch | aspect[:FACTOR] | split | split-stretch
inline FitMode parse_fit(const std::string& text) {
    FitMode mode;
    if (text == "stretch") {
        mode.kind = FitKind::Stretch;
    } else if (text == "split") {
        mode.kind = FitKind::SplitStack;
    } else if (text == "split-stretch") {
        mode.kind = FitKind::SplitStackStretch;
    } else if (text.rfind("aspect", 0) == 0) {
        mode.kind = FitKind::AspectMod;
        if (text.size() > 6) {
            if (text[6] != ':') fail("bad fit mode '", text, "'");
            try {
                mode.factor = std::stod(text.substr(7));
            } catch (const std::exception&) {
                fail("bad aspect factor in '", text, "'");
            }
            if (mode.factor <= 0) fail("aspect factor must be > 0");
        }
    } else {
        fail("unknown fit mode '", text, "' (want stretch|aspect:F|split|split-stretch)");
    }
    return mode;
}

inline std::string fit_to_string(const FitMode& mode) {
    switch (mode.kind) {
        case FitKind::Stretch: return "stretch";
        case FitKind::AspectMod: return "aspect:" + std::to_string(mode.factor);
        case FitKind::SplitStack: return "split";
        case FitKind::SplitStackStretch: return "split-stretch";
    }
    return "stretch";
}

// Bilinear resize, half-pixel centers, edge clamped. An identity size is an
// exact copy.
inline ImageF resize_bilinear(const ImageF& src, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) fail("resize target must be >= 1x1");
    if (out_w == src.w && out_h == src.h) return src;
    ImageF out(out_h, out_w, src.c);
    out.normalized = src.normalized;
    double sx = static_cast<double>(src.w) / out_w;
    double sy = static_cast<double>(src.h) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0) fy = 0;
        if (fy > src.h - 1) fy = src.h - 1;
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, src.h - 1);
        float wy = static_cast<float>(fy - y0);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0) fx = 0;
            if (fx > src.w - 1) fx = src.w - 1;
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, src.w - 1);
            float wx = static_cast<float>(fx - x0);
            for (int ch = 0; ch < src.c; ++ch) {
                float top = src.at(y0, x0, ch) * (1.f - wx) + src.at(y0, x1, ch) * wx;
                float bot = src.at(y1, x0, ch) * (1.f - wx) + src.at(y1, x1, ch) * wx;
                out.at(y, x, ch) = top * (1.f - wy) + bot * wy;
            }
        }
    }
    return out;
}

namespace detail {

// Downscale-only letterbox: content is centered on black; it is never
// upscaled, so content that already fits is placed pixel for pixel.
inline ImageF letterbox_fit(const ImageF& src, double pre_h_scale, int target) {
    double h_scaled = src.h * pre_h_scale;
    double s = std::min({1.0, target / static_cast<double>(src.w), target / h_scaled});
    int cw = std::max(1, static_cast<int>(std::lround(src.w * s)));
    int ch = std::max(1, static_cast<int>(std::lround(h_scaled * s)));
    cw = std::min(cw, target);
    ch = std::min(ch, target);
    ImageF content = resize_bilinear(src, cw, ch);
    ImageF out(target, target, src.c, 0.f);
    out.normalized = src.normalized;
    int x_off = (target - cw) / 2;
    int y_off = (target - ch) / 2;
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            for (int c = 0; c < src.c; ++c)
                out.at(y + y_off, x + x_off, c) = content.at(y, x, c);
    return out;
}

// Cut at the horizontal midpoint and stack left-over-right. The left half
// keeps the extra column of an odd width; the bottom row is padded with black
// on the right when the halves differ.
inline ImageF split_stack(const ImageF& src) {
    int left_w = (src.w + 1) / 2;
    int right_w = src.w - left_w;
    ImageF out(src.h * 2, left_w, src.c, 0.f);
    out.normalized = src.normalized;
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < left_w; ++x)
            for (int c = 0; c < src.c; ++c) out.at(y, x, c) = src.at(y, x, c);
        for (int x = 0; x < right_w; ++x)
            for (int c = 0; c < src.c; ++c)
                out.at(y + src.h, x, c) = src.at(y, left_w + x, c);
    }
    return out;
}

}  // namespace detail

// Fit a rectangular crop into a target x target square.
inline ImageF fit_square(const ImageF& img, const FitMode& mode, int target = 224) {
    if (img.h < 2 || img.w < 2) fail("fit_square needs a crop of at least 2x2");
    if (target < 2) fail("fit target must be >= 2");
    switch (mode.kind) {
        case FitKind::Stretch:
            return resize_bilinear(img, target, target);
        case FitKind::AspectMod:
            if (mode.factor <= 0) fail("aspect factor must be > 0");
            return detail::letterbox_fit(img, mode.factor, target);
        case FitKind::SplitStack:
            return detail::letterbox_fit(detail::split_stack(img), 1.0, target);
        case FitKind::SplitStackStretch:
            return resize_bilinear(detail::split_stack(img), target, target);
    }
    fail("unreachable fit mode");
}

// ITU-R BT.601 luma. Grayscale input passes through unchanged.
inline ImageF to_grayscale(const ImageF& img) {
    if (img.c == 1) return img;
    if (img.c != 3) fail("to_grayscale needs a 1- or 3-channel image");
    ImageF out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            out.at(y, x, 0) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                              0.114f * img.at(y, x, 2);
    return out;
}

inline constexpr float kImageNetMean[3] = {0.485f, 0.456f, 0.406f};
inline constexpr float kImageNetStd[3] = {0.229f, 0.224f, 0.225f};

// Per-channel (v - mean) / std with the standard ImageNet statistics.
inline ImageF normalize_rgb(const ImageF& img) {
    if (img.c != 3) fail("normalize_rgb requires color");
    ImageF out = img;
    out.normalized = true;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = (img.at(y, x, c) - kImageNetMean[c]) / kImageNetStd[c];
    return out;
}

// Shift each side independently by a uniform integer draw in [lo, hi]; positive
// moves a side away from the box center, negative toward it. The result is
// clamped to the image and redrawn (up to 8 times) if it would invert.
inline BoundingBox jitter_box(const BoundingBox& box, int img_w, int img_h, Rng& rng,
                              int lo, int hi) {
    if (lo > hi) fail("jitter range [", lo, ", ", hi, "] is empty");
    for (int attempt = 0; attempt < 8; ++attempt) {
        BoundingBox out = box;
        out.x0 -= static_cast<int>(rng.uniform_int(lo, hi));
        out.x1 += static_cast<int>(rng.uniform_int(lo, hi));
        out.y0 -= static_cast<int>(rng.uniform_int(lo, hi));
        out.y1 += static_cast<int>(rng.uniform_int(lo, hi));
        out.x0 = std::clamp(out.x0, 0, img_w);
        out.x1 = std::clamp(out.x1, 0, img_w);
        out.y0 = std::clamp(out.y0, 0, img_h);
        out.y1 = std::clamp(out.y1, 0, img_h);
        if (out.x0 < out.x1 && out.y0 < out.y1) return out;
    }
    return box;
}

// Per-element Gaussian noise, clamped to [0, 1] for unnormalized images.
inline ImageF add_noise(const ImageF& img, Rng& rng, double sigma) {
    if (sigma < 0) fail("noise sigma must be >= 0");
    if (sigma == 0) return img;
    ImageF out = img;
    for (auto& x : out.v) {
        x += static_cast<float>(rng.normal() * sigma);
        if (!img.normalized) x = std::clamp(x, 0.f, 1.f);
    }
    return out;
}

}  // namespace vpt
