// image.hpp -- dense8-bit and float image tensors, row-major H x W x C.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vpt/util.hpp"

namespace vpt {

struct ImageU8 {
    int h = 0, w = 0, c = 0;
    std::vector<std::uint8_t> v;

    ImageU8() = default;
    ImageU8(int h_, int w_, int c_, std::uint8_t fill = 0)
        : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    std::uint8_t& at(int y, int x, int ch) {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    std::uint8_t at(int y, int x, int ch) const {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
};

struct ImageF {
    int h = 0, w = 0, c = 0;
    bool normalized = false;  // true after per-channel statistics normalization
    std::vector<float> v;

    ImageF() = default;
    ImageF(int h_, int w_, int c_, float fill = 0.f)
        : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    float at(int y, int x, int ch) const {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
};

// 8-bit -> float in [0, 1].
inline ImageF to_float(const ImageU8& img) {
    ImageF out(img.h, img.w, img.c);
    for (std::size_t i = 0; i < img.v.size(); ++i) out.v[i] = static_cast<float>(img.v[i]) / 255.f;
    return out;
}

// Float in [0, 1] -> 8-bit, rounding to nearest and clamping.
inline ImageU8 to_u8(const ImageF& img) {
    ImageU8 out(img.h, img.w, img.c);
    for (std::size_t i = 0; i < img.v.size(); ++i) {
        float x = img.v[i] * 255.f;
        if (x < 0.f) x = 0.f;
        if (x > 255.f) x = 255.f;
        out.v[i] = static_cast<std::uint8_t>(std::lround(x));
    }
    return out;
}

template <class Img>
Img crop_image(const Img& img, int x0, int y0, int x1, int y1) {
    if (x0 < 0 || y0 < 0 || x1 > img.w || y1 > img.h || x0 >= x1 || y0 >= y1)
        fail("crop rectangle out of bounds: (", x0, ",", y0, ")-(", x1, ",", y1,
             ") on ", img.w, "x", img.h);
    Img out;
    out.h = y1 - y0;
    out.w = x1 - x0;
    out.c = img.c;
    out.v.resize(static_cast<std::size_t>(out.h) * out.w * out.c);
    std::size_t row_bytes = static_cast<std::size_t>(out.w) * out.c;
    for (int y = 0; y < out.h; ++y) {
        const auto* src = &img.v[(static_cast<std::size_t>(y + y0) * img.w + x0) * img.c];
        std::copy(src, src + row_bytes, &out.v[static_cast<std::size_t>(y) * row_bytes]);
    }
    return out;
}

}  // namespace vpt
