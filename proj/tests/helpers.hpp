#pragma once

#include <cstdint>

#include "poet/linalg.hpp"
#include "poet/panel.hpp"
#include "poet/rng.hpp"

namespace testing_util {

using poet::Index;
using poet::Matrix;
using poet::SymMatrix;

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
    poet::Engine rng = poet::make_engine(seed, 991);
    return poet::standard_normal(rng, rows, cols);
}

/// A'A / n + shift I, comfortably positive definite.
inline SymMatrix random_spd(Index p, std::uint64_t seed, double shift = 0.5) {
    const Matrix a = gaussian(2 * p, p, seed);
    return SymMatrix(Matrix(a.transpose() * a / static_cast<double>(2 * p) +
                            shift * Matrix::Identity(p, p)));
}

inline SymMatrix random_symmetric(Index p, std::uint64_t seed) {
    const Matrix a = gaussian(p, p, seed);
    return SymMatrix(Matrix(a + a.transpose()));
}

/// Demeaned panel of i.i.d. normals plus `K` strong Gaussian factors.
inline poet::ReturnPanel factor_panel(Index p, Index T, Index K, std::uint64_t seed) {
    const Matrix b = gaussian(p, K, seed);
    const Matrix f = gaussian(K, T, seed + 1);
    const Matrix u = gaussian(p, T, seed + 2);
    return poet::demean(poet::ReturnPanel::from_matrix(b * f + u));
}

}  // namespace testing_util
