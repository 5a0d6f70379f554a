#include "poet/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace poet::kernels {

namespace {

// Pair (i, j), j <= i, of the moment kernel. Columns of ut are the residual
// series of each asset.
inline void moment_pair(const Matrix& ut, Index i, Index j, double inv_t, double& sigma,
                        double& theta) {
    const double* a = ut.col(i).data();
    const double* b = ut.col(j).data();
    const Index T = ut.rows();
    double s = 0.0;
    for (Index t = 0; t < T; ++t) s += a[t] * b[t];
    s *= inv_t;
    double q = 0.0;
    for (Index t = 0; t < T; ++t) {
        const double d = a[t] * b[t] - s;
        q += d * d;
    }
    sigma = s;
    theta = q * inv_t;
}

inline double tau_entry(double theta, double scale) {
    if (std::isinf(scale)) return scale;
    return scale * std::sqrt(std::max(theta, 0.0));
}

}  // namespace

Moments residual_moments_serial(const Matrix& u) {
    const Index p = u.rows();
    const double inv_t = 1.0 / static_cast<double>(u.cols());
    const Matrix ut = u.transpose();
    Moments m{Matrix(p, p), Matrix(p, p)};
    for (Index j = 0; j < p; ++j) {
        for (Index i = j; i < p; ++i) {
            double s = 0.0;
            double q = 0.0;
            moment_pair(ut, i, j, inv_t, s, q);
            m.sigma(i, j) = m.sigma(j, i) = s;
            m.theta(i, j) = m.theta(j, i) = q;
        }
    }
    return m;
}

Moments residual_moments_parallel(const Matrix& u) {
    const Index p = u.rows();
    const double inv_t = 1.0 / static_cast<double>(u.cols());
    const Matrix ut = u.transpose();
    Moments m{Matrix(p, p), Matrix(p, p)};
#pragma omp parallel for schedule(dynamic, 4)
    for (Index j = 0; j < p; ++j) {
        for (Index i = j; i < p; ++i) {
            double s = 0.0;
            double q = 0.0;
            moment_pair(ut, i, j, inv_t, s, q);
            m.sigma(i, j) = m.sigma(j, i) = s;
            m.theta(i, j) = m.theta(j, i) = q;
        }
    }
    return m;
}

Matrix threshold_serial(const Matrix& raw, const Matrix& tau, const ShrinkageRule& rule) {
    const Index p = raw.rows();
    Matrix out(p, p);
    for (Index j = 0; j < p; ++j) {
        out(j, j) = raw(j, j);
        for (Index i = j + 1; i < p; ++i) {
            out(i, j) = out(j, i) = shrink_unchecked(raw(i, j), tau(i, j), rule);
        }
    }
    return out;
}

Matrix threshold_parallel(const Matrix& raw, const Matrix& tau, const ShrinkageRule& rule) {
    const Index p = raw.rows();
    Matrix out(p, p);
#pragma omp parallel for schedule(dynamic, 16)
    for (Index j = 0; j < p; ++j) {
        out(j, j) = raw(j, j);
        for (Index i = j + 1; i < p; ++i) {
            out(i, j) = out(j, i) = shrink_unchecked(raw(i, j), tau(i, j), rule);
        }
    }
    return out;
}

Matrix adaptive_tau_serial(const Matrix& theta, double scale) {
    Matrix out(theta.rows(), theta.cols());
    for (Index j = 0; j < theta.cols(); ++j) {
        for (Index i = 0; i < theta.rows(); ++i) out(i, j) = tau_entry(theta(i, j), scale);
    }
    return out;
}

Matrix adaptive_tau_parallel(const Matrix& theta, double scale) {
    Matrix out(theta.rows(), theta.cols());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < theta.cols(); ++j) {
        for (Index i = 0; i < theta.rows(); ++i) out(i, j) = tau_entry(theta(i, j), scale);
    }
    return out;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
    if (n > 0) {
        omp_set_num_threads(n);
    } else {
        omp_set_num_threads(omp_get_num_procs());
    }
}

}  // namespace poet::kernels
