#include "poet/threshold.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "poet/kernels.hpp"

namespace poet {

std::string to_string(ThresholdStyle style) {
    switch (style) {
        case ThresholdStyle::adaptive_theta: return "adaptive_theta";
        case ThresholdStyle::correlation: return "correlation";
        case ThresholdStyle::constant: return "constant";
    }
    return "unknown";
}

ThresholdStyle parse_threshold_style(const std::string& name) {
    if (name == "adaptive_theta" || name == "adaptive") return ThresholdStyle::adaptive_theta;
    if (name == "correlation") return ThresholdStyle::correlation;
    if (name == "constant") return ThresholdStyle::constant;
    throw std::invalid_argument("unknown threshold style '" + name + "'");
}

ThresholdSpec ThresholdSpec::resolved(Index p, Index T) const {
    ThresholdSpec out = *this;
    if (!out.omega) out.omega = poet::omega(p, T);
    return out;
}

void ThresholdSpec::validate() const {
    if (!(C >= 0.0)) throw std::invalid_argument("threshold constant C must be >= 0");
    if (omega && !(*omega >= 0.0)) throw std::invalid_argument("omega must be >= 0");
}

double omega(Index p, Index T) {
    if (p < 1 || T < 1) throw std::invalid_argument("omega: p and T must be positive");
    const double pd = static_cast<double>(p);
    return 1.0 / std::sqrt(pd) + std::sqrt(std::log(pd) / static_cast<double>(T));
}

ResidualMoments residual_moments(const Matrix& u_hat) {
    if (u_hat.cols() < 2) throw std::invalid_argument("residual_moments: need T >= 2");
    kernels::Moments m = kernels::residual_moments_parallel(u_hat);
    return ResidualMoments{SymMatrix(std::move(m.sigma)), std::move(m.theta)};
}

SymMatrix threshold_covariance(const SymMatrix& raw, const Matrix& tau,
                               const ShrinkageRule& rule) {
    if (tau.rows() != raw.dim() || tau.cols() != raw.dim()) {
        throw std::invalid_argument("threshold_covariance: tau has the wrong shape");
    }
    if (tau.size() > 0 && !(tau.minCoeff() >= 0.0)) {
        throw std::invalid_argument("threshold_covariance: tau must be non-negative");
    }
    rule.validate();
    return SymMatrix(kernels::threshold_parallel(raw.matrix(), tau, rule));
}

Matrix build_tau(const ThresholdSpec& spec, const SymMatrix& raw, const Matrix* theta) {
    spec.validate();
    if (!spec.omega) throw std::invalid_argument("build_tau: omega is unresolved");
    const Index p = raw.dim();
    const double scale = std::isinf(spec.C) ? spec.C : spec.C * *spec.omega;
    switch (spec.style) {
        case ThresholdStyle::adaptive_theta:
            if (theta == nullptr) {
                throw std::invalid_argument("build_tau: adaptive threshold needs theta_hat");
            }
            if (theta->rows() != p || theta->cols() != p) {
                throw std::invalid_argument("build_tau: theta_hat has the wrong shape");
            }
            return kernels::adaptive_tau_parallel(*theta, scale);
        case ThresholdStyle::correlation: {
            const Vector root = raw.diag().cwiseMax(0.0).cwiseSqrt();
            if (std::isinf(scale)) return Matrix::Constant(p, p, scale);
            return scale * root * root.transpose();
        }
        case ThresholdStyle::constant:
            return Matrix::Constant(p, p, scale);
    }
    throw std::invalid_argument("build_tau: unknown style");
}

double sparsity_measure(const SymMatrix& sigma_u, double q) {
    if (!(q >= 0.0)) throw std::invalid_argument("sparsity_measure: q must be >= 0");
    const Index p = sigma_u.dim();
    double best = 0.0;
    for (Index i = 0; i < p; ++i) {
        double row = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double a = std::abs(sigma_u(i, j));
            if (a == 0.0) continue;
            row += q == 0.0 ? 1.0 : std::pow(a, q);
        }
        best = std::max(best, row);
    }
    return best;
}

bool is_diagonal(const SymMatrix& s) {
    const Index p = s.dim();
    for (Index j = 0; j < p; ++j) {
        for (Index i = j + 1; i < p; ++i) {
            if (s(i, j) != 0.0) return false;
        }
    }
    return true;
}

}  // namespace poet
