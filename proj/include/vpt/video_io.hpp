// video_io.hpp -- frame-directory video ingestion.
//
// A "video" is a text manifest plus a directory of binary PPM (P6) frames.
// The manifest is authoritative for timing; frame files carry no metadata.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vpt/image.hpp"
#include "vpt/util.hpp"

namespace vpt {

struct VideoManifest {
    std::filesystem::path frame_dir;
    std::string frame_pattern;  // printf-style, one integer conversion
    int frame_count = 0;
    double fps = 30.0;
    int width = 0;
    int height = 0;
};

struct ClipWindow {
    int origin_frame = 0;
    int length = 0;
};

struct WindowPlan {
    std::vector<ClipWindow> windows;
    bool input_too_short = false;  // warning signal, not a failure
};

struct VideoClip {
    std::vector<ImageU8> frames;  // T frames, each H x W x C
    double fps = 30.0;
    int origin_frame = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// fps accepts decimal ("30", "29.97") or rational ("30000/1001") notation.
inline double parse_fps(const std::string& text) {
    std::size_t slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            double num = std::stod(text.substr(0, slash));
            double den = std::stod(text.substr(slash + 1));
            if (den == 0.0) fail("fps denominator is zero");
            return num / den;
        }
        return std::stod(text);
    } catch (const std::exception&) {
        fail("cannot parse fps value '", text, "'");
    }
}

inline int parse_int(const std::string& text, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        fail("cannot parse ", what, " value '", text, "'");
    return value;
}

}  // namespace detail

inline std::filesystem::path frame_path(const VideoManifest& m, int index) {
    char buf[512];
    int n = std::snprintf(buf, sizeof buf, m.frame_pattern.c_str(), index);
    if (n <= 0 || n >= static_cast<int>(sizeof buf))
        fail("bad frame pattern '", m.frame_pattern, "'");
    return m.frame_dir / buf;
}

// Line-based `key=value` manifest. Unknown keys are rejected, the frame
// directory is resolved relative to the manifest, and frame_count is verified
// against the files actually present.
inline VideoManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open manifest: ", path.string());

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("manifest line without '=': ", line);
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        static const char* known[] = {"frame_dir", "frame_pattern", "frame_count",
                                      "fps", "width", "height"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) fail("unknown manifest key '", key, "'");
        if (!kv.emplace(key, value).second) fail("duplicate manifest key '", key, "'");
    }
    for (const char* k : {"frame_dir", "frame_pattern", "frame_count", "width", "height"})
        if (!kv.count(k)) fail("manifest missing required key '", k, "'");

    VideoManifest m;
    m.frame_dir = path.parent_path() / kv["frame_dir"];
    m.frame_pattern = kv["frame_pattern"];
    m.frame_count = detail::parse_int(kv["frame_count"], "frame_count");
    m.fps = kv.count("fps") ? detail::parse_fps(kv["fps"]) : 30.0;
    m.width = detail::parse_int(kv["width"], "width");
    m.height = detail::parse_int(kv["height"], "height");

    if (m.fps <= 0) fail("non-positive fps");
    if (m.frame_count < 0) fail("negative frame_count");
    if (m.width < 1 || m.height < 1) fail("width and height must be >= 1");

    namespace fs = std::filesystem;
    if (m.frame_count > 0) {
        for (int i = 0; i < m.frame_count; ++i)
            if (!fs::exists(frame_path(m, i)))
                fail("frame_count mismatch: missing frame file ", frame_path(m, i).string());
    }
    if (fs::exists(frame_path(m, m.frame_count)))
        fail("frame_count mismatch: unexpected frame file ",
             frame_path(m, m.frame_count).string());
    return m;
}

inline void write_manifest(const VideoManifest& m, const std::filesystem::path& path,
                           const std::string& frame_dir_relative) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("cannot write manifest: ", path.string());
    out << "frame_dir=" << frame_dir_relative << "\n"
        << "frame_pattern=" << m.frame_pattern << "\n"
        << "frame_count=" << m.frame_count << "\n"
        << "fps=" << m.fps << "\n"
        << "width=" << m.width << "\n"
        << "height=" << m.height << "\n";
}

namespace detail {

// One whitespace-delimited PPM header token; '#' starts a comment to end of line.
inline std::string ppm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
        tok.push_back(static_cast<char>(bytes[pos++]));
    if (tok.empty()) fail("truncated PPM header");
    return tok;
}

}  // namespace detail

inline ImageU8 decode_ppm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    std::string magic = detail::ppm_token(bytes, pos);
    if (magic != "P6") fail("unsupported format '", magic, "' (want binary PPM P6)");
    int w = detail::parse_int(detail::ppm_token(bytes, pos), "PPM width");
    int h = detail::parse_int(detail::ppm_token(bytes, pos), "PPM height");
    int maxval = detail::parse_int(detail::ppm_token(bytes, pos), "PPM maxval");
    if (w < 1 || h < 1) fail("bad PPM dimensions ", w, "x", h);
    if (maxval != 255) fail("unsupported PPM maxval ", maxval);
    ++pos;  // single whitespace byte after maxval
    std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (pos + need > bytes.size()) fail("truncated PPM pixel data");
    ImageU8 img(h, w, 3);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
              bytes.begin() + static_cast<std::ptrdiff_t>(pos + need), img.v.begin());
    return img;
}

inline ImageU8 read_ppm(const std::filesystem::path& path) {
    return decode_ppm(read_binary_file(path));
}

inline std::vector<std::uint8_t> encode_ppm(const ImageU8& img) {
    if (img.c != 3) fail("PPM encoder needs a 3-channel image");
    std::string header = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), img.v.begin(), img.v.end());
    return bytes;
}

inline void write_ppm(const std::filesystem::path& path, const ImageU8& img) {
    write_binary_file(path, encode_ppm(img));
}

inline ImageU8 read_frame(const VideoManifest& m, int index) {
    if (index < 0 || index >= m.frame_count)
        fail("frame index ", index, " out of range [0, ", m.frame_count, ")");
    ImageU8 img = read_ppm(frame_path(m, index));
    if (img.w != m.width || img.h != m.height)
        fail("frame ", index, " is ", img.w, "x", img.h, " but manifest says ",
             m.width, "x", m.height);
    return img;
}

// Window starts 0, stride, 2*stride, ...; count = floor((frame_count - len)/stride) + 1.
inline WindowPlan iter_windows(const VideoManifest& m, int window_len = 16, int stride = 1) {
    if (window_len < 1) fail("window_len must be >= 1");
    if (stride < 1) fail("stride must be >= 1");
    WindowPlan plan;
    if (window_len > m.frame_count) {
        plan.input_too_short = true;
        return plan;
    }
    int count = (m.frame_count - window_len) / stride + 1;
    plan.windows.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        plan.windows.push_back(ClipWindow{i * stride, window_len});
    return plan;
}

inline VideoClip read_clip(const VideoManifest& m, int origin, int length) {
    if (origin < 0 || origin + length > m.frame_count)
        fail("clip [", origin, ", ", origin + length, ") out of range");
    VideoClip clip;
    clip.fps = m.fps;
    clip.origin_frame = origin;
    clip.frames.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) clip.frames.push_back(read_frame(m, origin + i));
    return clip;
}

}  // namespace vpt
