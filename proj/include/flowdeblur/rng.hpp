// Deterministic random helpers. std::mt19937_64 has a standard-mandated
// sequence; the distributions below are written out so that a fixed seed
// yields the same samples on every platform (the std distributions are
// implementation-defined).
#ifndef FLOWDEBLUR_RNG_HPP
#define FLOWDEBLUR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace flowdeblur {

using Rng = std::mt19937_64;

// Uniform in [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller (cosine branch).
inline double normal01(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng); // (0,1], keeps log finite
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Unbiased integer in [0,n) by rejection.
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// SplitMix64 finalizer, used to derive independent per-item seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace flowdeblur

#endif
