#pragma once

#include <cstdint>
#include <random>

#include "poet/linalg.hpp"

namespace poet {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `stream` under master `seed`. Independent streams let
/// replications run in any order and on any thread with identical output.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    return Engine(derive_seed(seed, stream));
}

/// rows x cols of i.i.d. N(0, 1), filled column by column.
inline Matrix standard_normal(Engine& rng, Index rows, Index cols) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) out(i, j) = z(rng);
    }
    return out;
}

}  // namespace poet
