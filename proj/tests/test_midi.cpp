#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "vpt/midi.hpp"
#include "vpt/rng.hpp"

using namespace vpt;

namespace {

using Bytes = std::vector<std::uint8_t>;

void push_u32(Bytes& out, std::uint32_t v) {
    out.push_back((v >> 24) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back(v & 0xff);
}

Bytes smf_file(int format, int division, const std::vector<Bytes>& tracks) {
    Bytes out = {'M', 'T', 'h', 'd', 0, 0, 0, 6};
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>(format));
    out.push_back(static_cast<std::uint8_t>(tracks.size() >> 8));
    out.push_back(static_cast<std::uint8_t>(tracks.size() & 0xff));
    out.push_back(static_cast<std::uint8_t>(division >> 8));
    out.push_back(static_cast<std::uint8_t>(division & 0xff));
    for (const Bytes& t : tracks) {
        out.insert(out.end(), {'M', 'T', 'r', 'k'});
        push_u32(out, static_cast<std::uint32_t>(t.size()));
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

const Bytes kEot = {0x00, 0xff, 0x2f, 0x00};

Bytes operator+(Bytes a, const Bytes& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("single note at the default tempo") {
    // division 480, no tempo event -> 500000 us per quarter -> 960 ticks/s.
    // Delta 480 (VLQ 0x83 0x60) = 0.5 s.
    Bytes track = Bytes{0x83, 0x60, 0x90, 0x3c, 0x40} + kEot;
    SmfData data = parse_smf(smf_file(0, 480, {track}));
    REQUIRE(data.notes.size() == 1);
    REQUIRE(data.notes[0].pitch == 60);
    REQUIRE(data.notes[0].onset == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(data.dropped_pitches == 0);
}

TEST_CASE("empty track parses to no notes") {
    SmfData data = parse_smf(smf_file(0, 480, {kEot}));
    REQUIRE(data.notes.empty());
}

TEST_CASE("running status and velocity-0 note-offs") {
    Bytes track = Bytes{
        0x00, 0x90, 0x3c, 0x40,  // C4 on at tick 0
        0x60, 0x3c, 0x00,        // running status: C4 off (vel 0) at tick 96
        0x00, 0x40, 0x40,        // running status: E4 on at tick 96
    } + kEot;
    SmfData data = parse_smf(smf_file(0, 480, {track}));
    REQUIRE(data.notes.size() == 2);
    REQUIRE(data.notes[0].pitch == 60);
    REQUIRE(data.notes[0].onset == Catch::Approx(0.0));
    REQUIRE(data.notes[1].pitch == 64);
    REQUIRE(data.notes[1].onset == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("a data byte with no preceding status is rejected") {
    Bytes track = Bytes{0x00, 0x3c, 0x40} + kEot;
    REQUIRE_THROWS_WITH(parse_smf(smf_file(0, 480, {track})),
                        Catch::Matchers::ContainsSubstring("running status"));
}

TEST_CASE("mid-track tempo change rescales later ticks only") {
    Bytes track = Bytes{
        0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20,  // 500000 at tick 0
        0x83, 0x60, 0xff, 0x51, 0x03, 0x0f, 0x42, 0x40,  // 1000000 at tick 480
        0x83, 0x60, 0x90, 0x3c, 0x40,  // note at tick 960
    } + kEot;
    SmfData data = parse_smf(smf_file(0, 480, {track}));
    REQUIRE(data.notes.size() == 1);
    // 480 ticks at 500 ms/qn (0.5 s) + 480 ticks at 1 s/qn (1.0 s)
    REQUIRE(data.notes[0].onset == Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("format 1: tempo track applies to note tracks") {
    Bytes tempo_track = Bytes{0x00, 0xff, 0x51, 0x03, 0x03, 0xd0, 0x90} + kEot;  // 250000
    Bytes note_track = Bytes{0x83, 0x60, 0x90, 0x3c, 0x40} + kEot;               // tick 480
    SmfData data = parse_smf(smf_file(1, 480, {tempo_track, note_track}));
    REQUIRE(data.notes.size() == 1);
    REQUIRE(data.notes[0].onset == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("non-standard divisions are honored") {
    Bytes track = Bytes{0x60, 0x90, 0x45, 0x40} + kEot;  // tick 96 at division 96
    SmfData data = parse_smf(smf_file(0, 96, {track}));
    REQUIRE(data.notes[0].onset == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("alien chunks between tracks are skipped") {
    Bytes file = smf_file(0, 480, {});
    // header claims one track; an unknown chunk precedes it
    file[11] = 1;
    file.insert(file.end(), {'X', 'F', 'I', 'L'});
    push_u32(file, 3);
    file.insert(file.end(), {0xde, 0xad, 0xbe});
    Bytes track = Bytes{0x00, 0x90, 0x3c, 0x40} + kEot;
    file.insert(file.end(), {'M', 'T', 'r', 'k'});
    push_u32(file, static_cast<std::uint32_t>(track.size()));
    file.insert(file.end(), track.begin(), track.end());
    REQUIRE(parse_smf(file).notes.size() == 1);
}

TEST_CASE("out-of-range pitches are counted, not kept") {
    Bytes track = Bytes{
        0x00, 0x90, 0x14, 0x40,  // pitch 20: below A0
        0x00, 0x90, 0x6d, 0x40,  // pitch 109: above C8
        0x00, 0x90, 0x15, 0x40,  // pitch 21: lowest key, kept
    } + kEot;
    SmfData data = parse_smf(smf_file(0, 480, {track}));
    REQUIRE(data.notes.size() == 1);
    REQUIRE(data.notes[0].pitch == 21);
    REQUIRE(data.dropped_pitches == 2);
}

TEST_CASE("simultaneous notes come out sorted by pitch") {
    Bytes track = Bytes{0x00, 0x90, 0x46, 0x40, 0x00, 0x90, 0x32, 0x40} + kEot;
    SmfData data = parse_smf(smf_file(0, 480, {track}));
    REQUIRE(data.notes.size() == 2);
    REQUIRE(data.notes[0].pitch == 50);
    REQUIRE(data.notes[1].pitch == 70);
}

TEST_CASE("malformed files are rejected") {
    SECTION("bad magic") {
        Bytes file = smf_file(0, 480, {kEot});
        file[1] = 'X';
        REQUIRE_THROWS_WITH(parse_smf(file), Catch::Matchers::ContainsSubstring("MThd"));
    }
    SECTION("SMPTE division") {
        REQUIRE_THROWS_WITH(parse_smf(smf_file(0, 0xe250, {kEot})),
                            Catch::Matchers::ContainsSubstring("SMPTE"));
    }
    SECTION("zero division") {
        REQUIRE_THROWS_AS(parse_smf(smf_file(0, 0, {kEot})), Error);
    }
    SECTION("format 2") {
        REQUIRE_THROWS_WITH(parse_smf(smf_file(2, 480, {kEot})),
                            Catch::Matchers::ContainsSubstring("format"));
    }
    SECTION("missing track") {
        Bytes file = smf_file(0, 480, {kEot});
        file[11] = 2;  // claims two tracks, provides one
        REQUIRE_THROWS_AS(parse_smf(file), Error);
    }
    SECTION("truncated track chunk") {
        Bytes file = smf_file(0, 480, {kEot});
        file.resize(file.size() - 2);
        REQUIRE_THROWS_AS(parse_smf(file), Error);
    }
    SECTION("five-byte variable-length quantity") {
        Bytes track = Bytes{0xff, 0xff, 0xff, 0xff, 0x7f, 0x90, 0x3c, 0x40} + kEot;
        REQUIRE_THROWS_WITH(parse_smf(smf_file(0, 480, {track})),
                            Catch::Matchers::ContainsSubstring("variable-length"));
    }
    SECTION("truncated tempo event") {
        Bytes track = {0x00, 0xff, 0x51, 0x03, 0x07, 0xa1};
        REQUIRE_THROWS_AS(parse_smf(smf_file(0, 480, {track})), Error);
    }
}

TEST_CASE("writer emits the documented byte stream") {
    Bytes got = write_smf({{0.5, 60}});
    Bytes want = {
        'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x01, 0xe0,
        'M', 'T', 'r', 'k', 0, 0, 0, 20,
        0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20,  // tempo 500000
        0x83, 0x60, 0x90, 0x3c, 0x40,              // on at tick 480
        0x60, 0x80, 0x3c, 0x00,                    // off 96 ticks (0.1 s) later
        0x00, 0xff, 0x2f, 0x00,
    };
    REQUIRE(got == want);
}

TEST_CASE("writer rejects bad notes") {
    REQUIRE_THROWS_AS(write_smf({{1.0, 110}}), Error);
    REQUIRE_THROWS_AS(write_smf({{-0.5, 60}}), Error);
}

TEST_CASE("write-parse round trip") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<NoteEvent> notes;
        int n = 1 + static_cast<int>(rng.uniform_int(0, 29));
        for (int i = 0; i < n; ++i)
            notes.push_back({rng.uniform01() * 100.0,
                             static_cast<int>(rng.uniform_int(kPitchLow, kPitchHigh))});
        SmfData back = parse_smf(write_smf(notes));
        REQUIRE(back.notes.size() == notes.size());
        std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
            return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
        });
        for (std::size_t i = 0; i < notes.size(); ++i) {
            REQUIRE(back.notes[i].pitch == notes[i].pitch);
            // tick grid is 960/s, so quantization error is at most ~0.521 ms
            REQUIRE(std::abs(back.notes[i].onset - notes[i].onset) <= 0.00105);
        }
    }
}
