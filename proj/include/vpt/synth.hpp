// synth.hpp -- deterministic synthetic top-down keyboard video with matching
// ground-truth MIDI and a detection file, standing in for real recordings.
//
// The keyboard is 88 key rectangles (52 white) rendered with per-pixel
// coverage anti-aliasing; a pressed key is darkened for a fixed number of
// frames starting at the onset's nearest frame, which is the same visual
// contract the training targets assume.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vpt/image.hpp"
#include "vpt/keyboard_region.hpp"
#include "vpt/labels.hpp"
#include "vpt/midi.hpp"
#include "vpt/rng.hpp"
#include "vpt/util.hpp"
#include "vpt/video_io.hpp"

namespace vpt {

struct SynthSpec {
    std::uint64_t seed = 0;
    double duration = 120.0;  // seconds
    double fps = 30.0;
    int width = 144, height = 48;          // full image
    BoundingBox box{8, 8, 136, 40, 1.0};   // keyboard region inside the image
    double rate = 0.8;                     // onsets per second
    int press_frames = 6;                  // visual press duration
    double darken = 0.5;                   // pressed-key luminance drop, (0,1]
    double noise_sigma = 0.0;              // per-frame pixel noise, intensity units
    bool descend_lr = true;                // pitch decreases left to right (player viewpoint)
    int pitch_lo = kPitchLow, pitch_hi = kPitchHigh;
    std::vector<NoteEvent> notes;          // explicit schedule; empty = draw from seed

    int frame_count() const { return static_cast<int>(std::llround(duration * fps)); }

    void validate() const {
        if (fps <= 0) fail("fps must be > 0");
        if (frame_count() < 16) fail("duration too short: ", frame_count(), " frames < 16");
        if (rate <= 0) fail("note rate must be > 0");
        if (press_frames < 1) fail("press duration must be >= 1 frame");
        if (darken <= 0 || darken > 1) fail("darken must be in (0, 1]");
        if (noise_sigma < 0) fail("noise sigma must be >= 0");
        if (!box.valid() || box.x0 < 0 || box.y0 < 0 || box.x1 > width || box.y1 > height)
            fail("keyboard box must lie inside the image");
        if (box.width() < 52) fail("keyboard box narrower than one pixel per white key");
        if (box.height() < 4) fail("keyboard box shorter than 4 pixels");
        if (pitch_lo < kPitchLow || pitch_hi > kPitchHigh || pitch_lo > pitch_hi)
            fail("pitch range must satisfy ", kPitchLow, " <= lo <= hi <= ", kPitchHigh);
        for (const auto& n : notes)
            if (n.pitch < kPitchLow || n.pitch > kPitchHigh || n.onset < 0)
                fail("explicit note outside pitch range or before t=0");
    }
};

namespace synth_detail {

inline bool is_black_pc(int pitch) {
    int pc = pitch % 12;
    return pc == 1 || pc == 3 || pc == 6 || pc == 8 || pc == 10;
}

// Number of white keys strictly below this pitch, counting from A0.
inline int whites_below(int pitch) {
    int count = 0;
    for (int p = kPitchLow; p < pitch; ++p)
        if (!is_black_pc(p)) ++count;
    return count;
}

inline constexpr float kBackground = 0.06f;
inline constexpr float kWhiteKey = 0.92f;
inline constexpr float kBlackKey = 0.35f;   // dark gray, so a press is still visible
inline constexpr float kWhiteSeam = 0.5f;   // half-pixel inset -> dark seams

}  // namespace synth_detail

struct KeyRect {
    double x0, y0, x1, y1;  // image coordinates, key index order (0 = A0)
    bool black;
};

// Geometry of key k (0..87) inside spec.box. White keys split the box width
// into 52 equal slots; black keys straddle the boundary between neighbours.
inline KeyRect key_rect(const SynthSpec& spec, int key) {
    if (key < 0 || key >= kKeyCount) fail("key index ", key, " outside 0..87");
    int pitch = kPitchLow + key;
    double bw = spec.box.width();
    double kw = bw / 52.0;
    KeyRect r{};
    r.black = synth_detail::is_black_pc(pitch);
    double x0, x1;
    if (r.black) {
        double center = synth_detail::whites_below(pitch) * kw;
        x0 = center - 0.3 * kw;
        x1 = center + 0.3 * kw;
    } else {
        int slot = synth_detail::whites_below(pitch);
        x0 = slot * kw + synth_detail::kWhiteSeam;
        x1 = (slot + 1) * kw - synth_detail::kWhiteSeam;
    }
    if (spec.descend_lr) {
        double m0 = bw - x1, m1 = bw - x0;
        x0 = m0, x1 = m1;
    }
    r.x0 = spec.box.x0 + std::max(0.0, x0);
    r.x1 = spec.box.x0 + std::min(bw, x1);
    r.y0 = spec.box.y0;
    r.y1 = r.black ? spec.box.y0 + 0.6 * spec.box.height() : spec.box.y1;
    return r;
}

namespace synth_detail {

// Paint an axis-aligned rectangle with per-pixel coverage blending.
inline void paint_rect(std::vector<float>& lum, int img_w, const KeyRect& r, float color) {
    int px0 = static_cast<int>(std::floor(r.x0));
    int px1 = static_cast<int>(std::ceil(r.x1));
    int py0 = static_cast<int>(std::floor(r.y0));
    int py1 = static_cast<int>(std::ceil(r.y1));
    for (int y = py0; y < py1; ++y) {
        double cy = std::min(r.y1, y + 1.0) - std::max(r.y0, static_cast<double>(y));
        if (cy <= 0) continue;
        for (int x = px0; x < px1; ++x) {
            double cx = std::min(r.x1, x + 1.0) - std::max(r.x0, static_cast<double>(x));
            if (cx <= 0) continue;
            float cov = static_cast<float>(cx * cy);
            float& v = lum[static_cast<std::size_t>(y) * img_w + x];
            v = v * (1.f - cov) + color * cov;
        }
    }
}

}  // namespace synth_detail

// Render one frame. `pressed` flags the 88 keys currently held; noise (if any)
// comes from `rng`, drawn once per pixel and shared by the three channels.
inline ImageU8 render_frame(const SynthSpec& spec, const std::vector<bool>& pressed,
                            Rng* rng = nullptr) {
    using namespace synth_detail;
    if (pressed.size() != kKeyCount) fail("pressed mask must have 88 entries");
    std::vector<float> lum(static_cast<std::size_t>(spec.width) * spec.height, kBackground);

    // whites first, blacks painted over them
    for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < kKeyCount; ++k) {
            KeyRect r = key_rect(spec, k);
            if (r.black != (pass == 1)) continue;
            float base = r.black ? kBlackKey : kWhiteKey;
            float color = pressed[static_cast<std::size_t>(k)]
                              ? base * (1.f - static_cast<float>(spec.darken))
                              : base;
            paint_rect(lum, spec.width, r, color);
        }
    }

    ImageU8 img(spec.height, spec.width, 3);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            float v = lum[static_cast<std::size_t>(y) * spec.width + x];
            if (rng && spec.noise_sigma > 0)
                v += static_cast<float>(rng->normal() * spec.noise_sigma);
            int q = static_cast<int>(std::lround(std::min(1.f, std::max(0.f, v)) * 255.f));
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<std::uint8_t>(q);
        }
    }
    return img;
}

// Draw the note schedule: exponential gaps at the requested rate, pitches from
// a reshuffled permutation of the allowed range so coverage stays even.
// Onsets keep clear of the ends, where sliding-window inference cannot see.
inline std::vector<NoteEvent> schedule_notes(const SynthSpec& spec) {
    if (!spec.notes.empty()) {
        std::vector<NoteEvent> notes = spec.notes;
        std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
            return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
        });
        return notes;
    }
    Rng rng(sub_seed(spec.seed, "data"));
    std::vector<int> deck;
    for (int p = spec.pitch_lo; p <= spec.pitch_hi; ++p) deck.push_back(p);
    std::size_t next = deck.size();  // forces an initial shuffle
    auto draw_pitch = [&]() {
        if (next == deck.size()) {
            for (std::size_t i = deck.size() - 1; i > 0; --i) {
                auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
                std::swap(deck[i], deck[j]);
            }
            next = 0;
        }
        return deck[next++];
    };

    std::vector<NoteEvent> notes;
    double lead_in = 0.5, tail = 0.7;
    double t = lead_in;
    while (true) {
        t += rng.exponential(spec.rate);
        if (t >= spec.duration - tail) break;
        notes.push_back({t, draw_pitch()});
    }
    return notes;
}

struct SynthResult {
    VideoManifest manifest;
    std::vector<NoteEvent> notes;
    BoundingBox box;
    std::filesystem::path manifest_path, detections_path, midi_path;
};

// Write frames/, video.manifest, detections.txt and truth.mid under out_dir.
// Everything is a pure function of the SynthSpec.
inline SynthResult generate(const SynthSpec& spec, const std::filesystem::path& out_dir,
                            int threads = 1) {
    spec.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "frames", ec);
    if (ec) fail("cannot create output directory ", (out_dir / "frames").string(), ": ", ec.message());

    SynthResult result;
    result.notes = schedule_notes(spec);
    result.box = spec.box;

    int fc = spec.frame_count();
    // per-frame pressed masks from the same rounding the targets use
    std::vector<std::vector<bool>> pressed(static_cast<std::size_t>(fc),
                                           std::vector<bool>(kKeyCount, false));
    for (const auto& n : result.notes) {
        int start = nearest_frame(n.onset, spec.fps);
        for (int f = std::max(0, start); f < std::min(fc, start + spec.press_frames); ++f)
            pressed[static_cast<std::size_t>(f)][static_cast<std::size_t>(key_index(n.pitch))] = true;
    }

    VideoManifest m;
    m.frame_dir = out_dir / "frames";
    m.frame_pattern = "frame_%06d.ppm";
    m.frame_count = fc;
    m.fps = spec.fps;
    m.width = spec.width;
    m.height = spec.height;

    parallel_for(fc, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t f = lo; f < hi; ++f) {
            Rng frame_rng(sub_seed(spec.seed, "frame." + std::to_string(f)));
            ImageU8 img = render_frame(spec, pressed[static_cast<std::size_t>(f)],
                                       spec.noise_sigma > 0 ? &frame_rng : nullptr);
            write_ppm(frame_path(m, static_cast<int>(f)), img);
        }
    });

    result.manifest_path = out_dir / "video.manifest";
    write_manifest(m, result.manifest_path, "frames");
    result.manifest = m;

    result.detections_path = out_dir / "detections.txt";
    {
        std::ofstream det(result.detections_path, std::ios::trunc);
        if (!det) fail("cannot write ", result.detections_path.string());
        det << "# frame x0 y0 x1 y1 confidence\n";
        for (int f = 0; f < std::min(fc, 30); ++f)
            det << f << " " << spec.box.x0 << " " << spec.box.y0 << " " << spec.box.x1 << " "
                << spec.box.y1 << " 1.0\n";
    }

    result.midi_path = out_dir / "truth.mid";
    write_binary_file(result.midi_path, write_smf(result.notes));
    return result;
}

}  // namespace vpt
