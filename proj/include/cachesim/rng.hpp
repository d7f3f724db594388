#pragma once

// Deterministic randomness for simulations. Every random draw in the
// project goes through Rng (std::mt19937_64) combined with the fixed
// draw algorithms below, never through std::*_distribution (whose
// output is implementation-defined). Identical seeds therefore
// reproduce identical runs on any platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cachesim {

using Rng = std::mt19937_64;

// Recorded in reports so downstream consumers know which generator and
// draw algorithms produced a run.
inline constexpr const char* kRngAlgorithmId = "mt19937_64/rejmod/box-muller/v1";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and up to two
// stream tags (e.g. instance index, repetition index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t x = splitmix64(base);
    x = splitmix64(x ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
    x = splitmix64(x ^ splitmix64(b + 0xc2b2ae3d27d4eb4fULL));
    return x;
}

// Unbiased draw from {0, ..., n-1} via rejection on the top of the range.
inline std::uint64_t bounded_uniform(Rng& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_double(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// One standard normal variate per call (Box-Muller, cosine branch).
inline double standard_normal(Rng& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

// Uniform sample of min(m, pool.size()) elements without replacement
// (partial Fisher-Yates). With m == 1 this consumes exactly one draw and
// is equivalent to pool[bounded_uniform(rng, pool.size())].
template <typename T>
void sample_without_replacement(const std::vector<T>& pool, std::size_t m, Rng& rng,
                                std::vector<T>& out) {
    out = pool;
    if (m > out.size()) m = out.size();
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded_uniform(rng, out.size() - i));
        std::swap(out[i], out[j]);
    }
    out.resize(m);
}

}  // namespace cachesim
