#pragma once

#include <cstdint>
#include <random>

namespace nmdf {

// Deterministic random helpers. std::mt19937_64 output is pinned by the
// standard, but the standard <random> distributions are not; sampling is done
// from raw engine draws so that seeded results are identical across platforms
// and standard libraries.

using Rng = std::mt19937_64;

/// Sub-stream seed for restart/trial index `r` of a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t r) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (r + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection (n >= 1).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace nmdf
