#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace genlie {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// One RNG per run, derived streams per purpose so that toggling one consumer
// (e.g. dropout) cannot perturb another (e.g. batch order).
inline std::mt19937_64 derived_rng(std::uint64_t seed, std::string_view purpose,
                                   std::uint64_t index = 0) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(fnv1a(purpose) + index)));
}

// Uniform in [0,1) with a fully specified mapping (mt19937_64 output is
// portable; standard distributions are not).
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, one sample per call.
inline double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace genlie
