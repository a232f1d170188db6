#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kdesign {

// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a generator for a tagged subtask (e.g. {time_index, repetition}).
/// Streams with distinct paths are statistically independent, so work can be
/// fanned out per task without sharing generator state.
inline std::mt19937_64 derive_stream(std::uint64_t seed,
                                     std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t tag : path)
        h = mix64(h ^ (tag + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return std::mt19937_64(h);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline int uniform_index(std::mt19937_64& rng, int n) {
    int i = static_cast<int>(uniform_unit(rng) * n);
    return i < n ? i : n - 1;
}

}  // namespace kdesign
