// util.hpp -- error type, small file and threading helpers shared across the library.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vpt {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

template <typename... Args>
[[noreturn]] inline void fail(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    throw Error(os.str());
}

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: ", path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_binary_file(const std::filesystem::path& path,
                              const std::uint8_t* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write file: ", path.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail("write failed: ", path.string());
}

inline void write_binary_file(const std::filesystem::path& path,
                              const std::vector<std::uint8_t>& bytes) {
    write_binary_file(path, bytes.data(), bytes.size());
}

inline int default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (hw > 8) hw = 8;
    return static_cast<int>(hw);
}

// Static index partition. Results written to disjoint slots stay deterministic
// regardless of the thread count.
inline void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (n <= 0) return;
    if (threads <= 0) threads = default_thread_count();
    if (threads == 1 || n == 1) {
        body(0, n);
        return;
    }
    std::int64_t nt = std::min<std::int64_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    std::int64_t chunk = (n + nt - 1) / nt;
    for (std::int64_t t = 0; t < nt; ++t) {
        std::int64_t lo = t * chunk;
        std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace vpt
