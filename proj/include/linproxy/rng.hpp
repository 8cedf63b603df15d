#pragma once

// Deterministic random primitives. The standard <random> distributions are
// not pinned across library implementations, so everything that feeds a
// serialized artifact goes through these instead.

#include <cstdint>
#include <string_view>
#include <vector>

namespace linproxy::rng {

// FNV-1a 64-bit over raw bytes.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seed derivation used across the pipeline: hash of (base seed, tag, index),
// mixed through splitmix64. Stable across platforms and schedule order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = fnv1a(tag);
    std::uint64_t state = base ^ (h + 0x9e3779b97f4a7c15ull) ^ (index * 0xd1b54a32d192ed03ull);
    std::uint64_t out = splitmix64(state);
    return splitmix64(state) ^ out;
}

// Small deterministic generator (xoshiro-free: chained splitmix64 is enough
// for corpus synthesis and bootstrap resampling).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant here.
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Uniform in [lo, hi].
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller, one sample per call. Deterministic, no cached spare.
    double next_normal(double mean, double sd);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace linproxy::rng
