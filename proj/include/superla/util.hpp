#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace superla {

// splitmix64 finalizer; derives independent stream seeds from (base, salt).
inline uint64_t mix_seed(uint64_t base, uint64_t salt) {
    uint64_t z = base ^ (0x9e3779b97f4a7c15ull + (salt << 1));
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Uniform draw in [0, bound), bound >= 1. Rejection sampling keeps the output
// identical across standard-library implementations.
inline uint64_t bounded_rand(std::mt19937_64& rng, uint64_t bound) {
    const uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        const uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

// Fisher-Yates on top of bounded_rand, same portability rationale.
template <typename T>
void deterministic_shuffle(std::vector<T>& values, std::mt19937_64& rng) {
    for (size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[bounded_rand(rng, i)]);
    }
}

// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// argmax with ties broken toward the smallest index
inline int argmax_smallest(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace superla
