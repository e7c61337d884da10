// rng.hpp -- seeded random number generation.
//
// All randomness in the library flows through explicit Rng instances so every
// pipeline stage is a pure function of (inputs, seed). Draws are hand-rolled on
// top of mt19937_64 because the standard distributions are not bit-stable
// across library versions.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace vpt {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derive a named sub-seed from a master seed, e.g. sub_seed(seed, "cull").
inline std::uint64_t sub_seed(std::uint64_t master, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char ch : name) {
        h ^= static_cast<std::uint8_t>(ch);
        h *= 0x100000001b3ull;
    }
    return splitmix64(master ^ h);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], inclusive, via rejection sampling.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        std::uint64_t limit = ~0ull - ~0ull % span;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    // Standard normal via Box-Muller; one spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double two_pi_u2 = 2.0 * 3.14159265358979323846 * u2;
        spare_ = mag * std::sin(two_pi_u2);
        has_spare_ = true;
        return mag * std::cos(two_pi_u2);
    }

    // Normal truncated to +/- 2 standard deviations.
    double truncated_normal(double stddev) {
        double x;
        do {
            x = normal();
        } while (x < -2.0 || x > 2.0);
        return x * stddev;
    }

    double exponential(double rate) {
        double u;
        do {
            u = uniform01();
        } while (u <= 0.0);
        return -std::log(u) / rate;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace vpt
