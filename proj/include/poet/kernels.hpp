#pragma once

#include "poet/linalg.hpp"
#include "poet/shrinkage.hpp"

// Elementwise O(p^2) and O(p^2 T) kernels. Each has an OpenMP version used by
// the library and a plain serial version kept as the reference for tests and
// benchmarks. Both perform the same floating-point operations per entry in
// the same order, so their outputs are bitwise identical for any thread
// count.
namespace poet::kernels {

struct Moments {
    Matrix sigma;  // T^{-1} sum_t u_it u_jt
    Matrix theta;  // T^{-1} sum_t (u_it u_jt - sigma_ij)^2
};

Moments residual_moments_serial(const Matrix& u);
Moments residual_moments_parallel(const Matrix& u);

/// Diagonal copied, off-diagonals shrunk; the lower triangle is computed and
/// mirrored.
Matrix threshold_serial(const Matrix& raw, const Matrix& tau, const ShrinkageRule& rule);
Matrix threshold_parallel(const Matrix& raw, const Matrix& tau, const ShrinkageRule& rule);

/// scale * sqrt(max(theta, 0)) entrywise.
Matrix adaptive_tau_serial(const Matrix& theta, double scale);
Matrix adaptive_tau_parallel(const Matrix& theta, double scale);

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();
/// n <= 0 restores the runtime default.
void set_threads(int n);

}  // namespace poet::kernels
