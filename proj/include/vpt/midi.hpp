// midi.hpp -- Standard MIDI File reading and writing for onset-only note data.
//
// Reader: SMF formats 0 and 1, running status, tempo map across tracks,
// note-on with velocity 0 treated as note-off. Writer: format 0, division 480,
// tempo 500000, fixed note length 0.1 s, velocity 64.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vpt/util.hpp"

namespace vpt {

inline constexpr int kPitchLow = 21;    // A0
inline constexpr int kPitchHigh = 108;  // C8
inline constexpr int kKeyCount = 88;

struct NoteEvent {
    double onset = 0.0;  // seconds
    int pitch = 0;       // MIDI number in [21, 108]

    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

inline int key_index(int pitch) { return pitch - kPitchLow; }

struct SmfData {
    std::vector<NoteEvent> notes;  // sorted by (onset, pitch)
    int dropped_pitches = 0;       // note-ons outside the 88-key range
};

namespace smf_detail {

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }

    std::uint8_t u8() {
        if (pos >= bytes.size()) fail("truncated MIDI data");
        return bytes[pos++];
    }

    std::uint32_t u16() {
        std::uint32_t hi = u8(), lo = u8();
        return (hi << 8) | lo;
    }

    std::uint32_t u32() {
        std::uint32_t a = u16(), b = u16();
        return (a << 16) | b;
    }

    void skip(std::size_t n) {
        if (pos + n > bytes.size()) fail("truncated MIDI data");
        pos += n;
    }

    // Variable-length quantity, at most 4 bytes.
    std::uint32_t vlq() {
        std::uint32_t value = 0;
        for (int i = 0; i < 4; ++i) {
            std::uint8_t b = u8();
            value = (value << 7) | (b & 0x7f);
            if (!(b & 0x80)) return value;
        }
        fail("variable-length quantity longer than 4 bytes");
    }
};

struct TempoChange {
    std::uint64_t tick;
    std::uint32_t us_per_qn;
};

}  // namespace smf_detail

inline SmfData parse_smf(std::span<const std::uint8_t> bytes) {
    smf_detail::Reader r{bytes};
    if (bytes.size() < 14 || r.u8() != 'M' || r.u8() != 'T' || r.u8() != 'h' || r.u8() != 'd')
        fail("bad MIDI magic (MThd missing)");
    std::uint32_t header_len = r.u32();
    if (header_len < 6) fail("bad MThd length ", header_len);
    std::uint32_t format = r.u16();
    std::uint32_t ntrks = r.u16();
    std::uint32_t division = r.u16();
    r.skip(header_len - 6);
    if (format > 1) fail("unsupported SMF format ", format);
    if (division & 0x8000) fail("SMPTE division is unsupported");
    if (division == 0) fail("zero division");

    struct RawNote {
        std::uint64_t tick;
        int pitch;
    };
    std::vector<RawNote> raw;
    std::vector<smf_detail::TempoChange> tempos;

    std::uint32_t tracks_seen = 0;
    while (!r.eof() && tracks_seen < ntrks) {
        if (r.bytes.size() - r.pos < 8) fail("truncated chunk header");
        char id[4];
        for (char& ch : id) ch = static_cast<char>(r.u8());
        std::uint32_t chunk_len = r.u32();
        if (std::string_view(id, 4) != "MTrk") {
            r.skip(chunk_len);  // alien chunk, allowed by the standard
            continue;
        }
        ++tracks_seen;
        std::size_t end = r.pos + chunk_len;
        if (end > r.bytes.size()) fail("truncated track chunk");

        std::uint64_t tick = 0;
        std::uint8_t running = 0;
        bool done = false;
        while (!done && r.pos < end) {
            tick += r.vlq();
            std::uint8_t status = r.u8();
            if (status < 0x80) {
                if (running == 0) fail("data byte without running status");
                --r.pos;
                status = running;
            }
            if (status == 0xff) {
                running = 0;  // meta events clear running status
                std::uint8_t type = r.u8();
                std::uint32_t len = r.vlq();
                if (r.pos + len > end) fail("truncated meta event");
                if (type == 0x51) {
                    if (len != 3) fail("bad tempo event length ", len);
                    std::uint32_t t = (static_cast<std::uint32_t>(r.u8()) << 16) |
                                      (static_cast<std::uint32_t>(r.u8()) << 8) | r.u8();
                    tempos.push_back({tick, t});
                } else {
                    if (type == 0x2f) done = true;
                    r.skip(len);
                }
            } else if (status == 0xf0 || status == 0xf7) {
                running = 0;
                std::uint32_t len = r.vlq();
                r.skip(len);
            } else {
                running = status;
                std::uint8_t kind = status & 0xf0;
                std::uint8_t d1 = r.u8();
                if (kind == 0xc0 || kind == 0xd0) {
                    // program change / channel pressure take one data byte
                } else {
                    std::uint8_t d2 = r.u8();
                    if (kind == 0x90 && d2 > 0) raw.push_back({tick, d1});
                }
            }
        }
        r.pos = end;
    }
    if (tracks_seen < ntrks) fail("expected ", ntrks, " tracks, found ", tracks_seen);

    // Tempo mapping: default 500000 us per quarter from tick 0, overridden by
    // tempo events in tick order (later events win on equal ticks).
    std::stable_sort(tempos.begin(), tempos.end(),
                     [](const auto& a, const auto& b) { return a.tick < b.tick; });
    struct Segment {
        std::uint64_t tick;
        double sec;
        double sec_per_tick;
    };
    std::vector<Segment> segments;
    segments.push_back({0, 0.0, 500000.0 / division / 1e6});
    for (const auto& tc : tempos) {
        const Segment& last = segments.back();
        double sec = last.sec + static_cast<double>(tc.tick - last.tick) * last.sec_per_tick;
        double spt = static_cast<double>(tc.us_per_qn) / division / 1e6;
        if (tc.tick == last.tick)
            segments.back() = {tc.tick, last.sec, spt};
        else
            segments.push_back({tc.tick, sec, spt});
    }
    auto tick_to_sec = [&](std::uint64_t tick) {
        std::size_t i = segments.size() - 1;
        while (segments[i].tick > tick) --i;
        return segments[i].sec + static_cast<double>(tick - segments[i].tick) * segments[i].sec_per_tick;
    };

    SmfData out;
    out.notes.reserve(raw.size());
    for (const auto& n : raw) {
        if (n.pitch < kPitchLow || n.pitch > kPitchHigh) {
            ++out.dropped_pitches;
            continue;
        }
        out.notes.push_back({tick_to_sec(n.tick), n.pitch});
    }
    std::sort(out.notes.begin(), out.notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
        return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
    });
    return out;
}

inline SmfData parse_smf(const std::vector<std::uint8_t>& bytes) {
    return parse_smf(std::span<const std::uint8_t>(bytes));
}

namespace smf_detail {

inline void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t value) {
    std::uint8_t stack[4];
    int n = 0;
    do {
        stack[n++] = static_cast<std::uint8_t>(value & 0x7f);
        value >>= 7;
    } while (value != 0);
    while (n > 1) out.push_back(stack[--n] | 0x80);
    out.push_back(stack[0]);
}

}  // namespace smf_detail

inline constexpr int kWriteDivision = 480;
inline constexpr std::uint32_t kWriteTempo = 500000;  // 120 bpm
inline constexpr double kWriteNoteLen = 0.1;          // onset-only output
inline constexpr std::uint8_t kWriteVelocity = 64;

inline std::vector<std::uint8_t> write_smf(std::vector<NoteEvent> notes) {
    for (const auto& n : notes)
        if (n.pitch < kPitchLow || n.pitch > kPitchHigh)
            fail("pitch ", n.pitch, " outside the 88-key range [", kPitchLow, ", ", kPitchHigh, "]");
    std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
        return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
    });

    const double ticks_per_sec = kWriteDivision * 1e6 / kWriteTempo;
    struct Event {
        std::uint64_t tick;
        int on;  // note-offs sort before note-ons at the same tick
        int pitch;
    };
    std::vector<Event> events;
    events.reserve(notes.size() * 2);
    for (const auto& n : notes) {
        if (n.onset < 0) fail("negative onset ", n.onset);
        auto on_tick = static_cast<std::uint64_t>(std::llround(n.onset * ticks_per_sec));
        auto off_tick = on_tick + static_cast<std::uint64_t>(std::llround(kWriteNoteLen * ticks_per_sec));
        events.push_back({on_tick, 1, n.pitch});
        events.push_back({off_tick, 0, n.pitch});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return std::tuple(a.tick, a.on, a.pitch) < std::tuple(b.tick, b.on, b.pitch);
    });

    std::vector<std::uint8_t> track;
    track.insert(track.end(), {0x00, 0xff, 0x51, 0x03});
    track.push_back((kWriteTempo >> 16) & 0xff);
    track.push_back((kWriteTempo >> 8) & 0xff);
    track.push_back(kWriteTempo & 0xff);
    std::uint64_t cursor = 0;
    for (const auto& e : events) {
        smf_detail::put_vlq(track, static_cast<std::uint32_t>(e.tick - cursor));
        cursor = e.tick;
        track.push_back(e.on ? 0x90 : 0x80);
        track.push_back(static_cast<std::uint8_t>(e.pitch));
        track.push_back(e.on ? kWriteVelocity : 0);
    }
    track.insert(track.end(), {0x00, 0xff, 0x2f, 0x00});

    std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6,
                                     0, 0,  // format 0
                                     0, 1,  // one track
                                     static_cast<std::uint8_t>(kWriteDivision >> 8),
                                     static_cast<std::uint8_t>(kWriteDivision & 0xff),
                                     'M', 'T', 'r', 'k'};
    auto len = static_cast<std::uint32_t>(track.size());
    out.push_back((len >> 24) & 0xff);
    out.push_back((len >> 16) & 0xff);
    out.push_back((len >> 8) & 0xff);
    out.push_back(len & 0xff);
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

}  // namespace vpt
