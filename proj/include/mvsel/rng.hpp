#pragma once

#include <cstdint>
#include <random>

namespace mvsel {

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mixSeed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for task `index` of a named stream under a root seed.
constexpr std::uint64_t deriveSeed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
    return mixSeed(mixSeed(mixSeed(root) ^ stream) + index);
}

namespace streams {
inline constexpr std::uint64_t folds = 0xF01D;
inline constexpr std::uint64_t resamples = 0x5AB5;
inline constexpr std::uint64_t datasets = 0xDA7A;
}  // namespace streams

using Rng = std::mt19937_64;

}  // namespace mvsel
