// labels.hpp -- note onsets to per-window training labels.
//
// Each onset marks its nearest frame n plus the two neighbors n-1 and n+1.
// A 16-frame window starting at s is labeled per key from the central frame
// pair (s+7, s+8): 1 when both frames are marked, 0.5 when exactly one is.
// For an isolated onset this yields 2 windows at 1.0 and 2 at 0.5.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vpt/midi.hpp"
#include "vpt/rng.hpp"
#include "vpt/util.hpp"

namespace vpt {

inline constexpr int kWindowLen = 16;

struct FrameOnsetMap {
    double fps = 30.0;
    std::array<std::vector<int>, kKeyCount> marks;  // sorted, unique frame indices

    bool marked(int key, int frame) const {
        const auto& m = marks[static_cast<std::size_t>(key)];
        return std::binary_search(m.begin(), m.end(), frame);
    }
};

// Nearest frame with half-up ties: n = floor(onset * fps + 0.5).
inline int nearest_frame(double onset, double fps) {
    return static_cast<int>(std::floor(onset * fps + 0.5));
}

inline FrameOnsetMap onsets_to_frames(const std::vector<NoteEvent>& notes, double fps = 30.0) {
    if (fps <= 0) fail("fps must be > 0");
    FrameOnsetMap map;
    map.fps = fps;
    for (const auto& note : notes) {
        if (note.pitch < kPitchLow || note.pitch > kPitchHigh)
            fail("pitch ", note.pitch, " outside the 88-key range");
        int n = nearest_frame(note.onset, fps);
        auto& m = map.marks[static_cast<std::size_t>(key_index(note.pitch))];
        for (int f : {n - 1, n, n + 1})
            if (f >= 0) m.push_back(f);
    }
    for (auto& m : map.marks) {
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
    }
    return map;
}

using WindowLabel = std::array<float, kKeyCount>;

inline WindowLabel window_label(const FrameOnsetMap& map, int window_start) {
    WindowLabel label{};
    for (int k = 0; k < kKeyCount; ++k) {
        int hits = (map.marked(k, window_start + 7) ? 1 : 0) +
                   (map.marked(k, window_start + 8) ? 1 : 0);
        label[static_cast<std::size_t>(k)] = hits == 2 ? 1.f : (hits == 1 ? 0.5f : 0.f);
    }
    return label;
}

inline bool any_positive(const WindowLabel& label) {
    for (float v : label)
        if (v > 0.f) return true;
    return false;
}

// Windows with a positive label always survive; all-zero windows are kept with
// independent probability keep_fraction. One uniform draw per zero window, in
// sequence order, so the result is a pure function of (input, seed).
template <class Sample, class LabelOf>
std::vector<Sample> cull_empty(const std::vector<Sample>& samples, Rng& rng,
                               double keep_fraction, LabelOf&& label_of) {
    if (keep_fraction < 0.0 || keep_fraction > 1.0)
        fail("keep_fraction must be in [0, 1]");
    std::vector<Sample> kept;
    kept.reserve(samples.size());
    for (const auto& s : samples) {
        if (any_positive(label_of(s)))
            kept.push_back(s);
        else if (rng.uniform01() < keep_fraction)
            kept.push_back(s);
    }
    return kept;
}

}  // namespace vpt
