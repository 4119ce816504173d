#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace dcsvm {

// Deterministic randomness helpers on top of std::mt19937_64. The engine
// itself is fully specified by the standard; std::uniform_int_distribution
// and friends are not, so bounded draws are done by hand to keep seeded
// runs byte-reproducible across toolchains.

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Unbiased draw from [0, bound) by rejection.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % bound;
}

// Uniform double in [0, 1).
inline double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller (no std::normal_distribution for portability).
inline double draw_normal(std::mt19937_64& rng);

template <typename T>
void shuffle_values(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(draw_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// First `count` elements of a seeded Fisher-Yates shuffle of `pool`.
inline std::vector<int> sample_without_replacement(std::span<const int> pool, int count,
                                                   std::mt19937_64& rng) {
    std::vector<int> v(pool.begin(), pool.end());
    const std::size_t take = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i < take && i + 1 < v.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(draw_below(rng, v.size() - i));
        std::swap(v[i], v[j]);
    }
    v.resize(take);
    return v;
}

inline double draw_normal(std::mt19937_64& rng) {
    double u1 = draw_unit(rng);
    while (u1 <= 0.0) u1 = draw_unit(rng);
    const double u2 = draw_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace dcsvm
