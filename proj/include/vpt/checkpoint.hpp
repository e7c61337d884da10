// checkpoint.hpp -- self-describing binary weight files.
//
// Layout (all integers little-endian, floats IEEE-754 binary32):
//   8 bytes   magic "VPTW0001"
//   8 x i32   model config: frames, res, tubelet, patch, dim, layers, heads, channels
//   u32 + N   metadata blob, "key=value\n" lines (preprocessing settings etc.)
//   u32       tensor count
//   per tensor: u16 name length, name, u32 rows, u32 cols, rows*cols floats (row-major)
//
// The metadata block makes a checkpoint enough to reproduce inference-side
// preprocessing without repeating flags on the command line.
#pragma once

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "vpt/model.hpp"
#include "vpt/util.hpp"

namespace vpt {

struct Checkpoint {
    ModelParams<float> params;
    std::map<std::string, std::string> meta;
};

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'V', 'P', 'T', 'W', '0', '0', '0', '1'};

inline void put_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(src);
    out.insert(out.end(), b, b + n);
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) fail("checkpoint truncated");
    }
    void take(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes.data() + pos, n);
        pos += n;
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
};

}  // namespace ckpt_detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    using namespace ckpt_detail;
    std::vector<std::uint8_t> out;
    put_bytes(out, kMagic, sizeof kMagic);
    const ModelConfig& c = ckpt.params.cfg;
    for (int v : {c.frames, c.res, c.tubelet, c.patch, c.dim, c.layers, c.heads, c.channels})
        put_i32(out, v);

    std::string meta;
    for (const auto& [k, v] : ckpt.meta) {
        if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
            v.find('\n') != std::string::npos)
            fail("metadata keys/values must not contain '=' (key) or newlines");
        meta += k;
        meta += '=';
        meta += v;
        meta += '\n';
    }
    put_u32(out, static_cast<std::uint32_t>(meta.size()));
    put_bytes(out, meta.data(), meta.size());

    auto views = tensor_views(const_cast<ModelParams<float>&>(ckpt.params));
    put_u32(out, static_cast<std::uint32_t>(views.size()));
    for (const auto& tv : views) {
        if (tv.name.size() > 0xffff) fail("tensor name too long");
        put_u16(out, static_cast<std::uint16_t>(tv.name.size()));
        put_bytes(out, tv.name.data(), tv.name.size());
        put_u32(out, static_cast<std::uint32_t>(tv.rows));
        put_u32(out, static_cast<std::uint32_t>(tv.cols));
        put_bytes(out, tv.data, static_cast<std::size_t>(tv.size()) * sizeof(float));
    }
    return out;
}

inline Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    using namespace ckpt_detail;
    Reader r{bytes};

    char magic[8];
    r.take(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) fail("not a weight file (bad magic)");

    ModelConfig cfg;
    cfg.frames = r.i32();
    cfg.res = r.i32();
    cfg.tubelet = r.i32();
    cfg.patch = r.i32();
    cfg.dim = r.i32();
    cfg.layers = r.i32();
    cfg.heads = r.i32();
    cfg.channels = r.i32();
    cfg.validate();

    Checkpoint ckpt;
    ckpt.params = zero_params<float>(cfg);

    std::uint32_t meta_len = r.u32();
    std::string meta(meta_len, '\0');
    r.take(meta.data(), meta_len);
    std::size_t start = 0;
    while (start < meta.size()) {
        std::size_t nl = meta.find('\n', start);
        if (nl == std::string::npos) fail("checkpoint metadata not newline-terminated");
        std::string line = meta.substr(start, nl - start);
        start = nl + 1;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("malformed checkpoint metadata line: ", line);
        ckpt.meta[line.substr(0, eq)] = line.substr(eq + 1);
    }

    auto views = tensor_views(ckpt.params);
    std::uint32_t count = r.u32();
    if (count != views.size())
        fail("checkpoint holds ", count, " tensors, model needs ", views.size());
    std::vector<bool> seen(views.size(), false);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t name_len = r.u16();
        std::string name(name_len, '\0');
        r.take(name.data(), name_len);
        std::uint32_t rows = r.u32();
        std::uint32_t cols = r.u32();
        std::size_t idx = views.size();
        for (std::size_t t = 0; t < views.size(); ++t)
            if (views[t].name == name) { idx = t; break; }
        if (idx == views.size()) fail("unknown tensor in checkpoint: ", name);
        if (seen[idx]) fail("duplicate tensor in checkpoint: ", name);
        seen[idx] = true;
        auto& tv = views[idx];
        if (static_cast<long>(rows) != tv.rows || static_cast<long>(cols) != tv.cols)
            fail("tensor ", name, " has shape ", rows, "x", cols, ", expected ", tv.rows, "x", tv.cols);
        r.take(tv.data, static_cast<std::size_t>(tv.size()) * sizeof(float));
    }
    if (r.pos != bytes.size()) fail("trailing bytes after checkpoint payload");
    return ckpt;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_binary_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_binary_file(path));
}

}  // namespace vpt
