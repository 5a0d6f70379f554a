#pragma once

#include <optional>
#include <string>

#include "poet/linalg.hpp"
#include "poet/shrinkage.hpp"

namespace poet {

enum class ThresholdStyle {
    adaptive_theta,  // tau_ij = C sqrt(theta_ij) omega
    correlation,     // tau_ij = C omega sqrt(r_ii r_jj)
    constant,        // tau_ij = C omega
};

std::string to_string(ThresholdStyle style);
ThresholdStyle parse_threshold_style(const std::string& name);

struct ThresholdSpec {
    double C = 0.5;
    ThresholdStyle style = ThresholdStyle::adaptive_theta;
    /// Rate omega_T; filled from omega(p, T) when unset.
    std::optional<double> omega;

    ThresholdSpec resolved(Index p, Index T) const;
    /// Throws std::invalid_argument if C < 0 or omega is negative.
    void validate() const;
};

/// 1/sqrt(p) + sqrt(log(p) / T)
double omega(Index p, Index T);

struct ResidualMoments {
    SymMatrix sigma;
    Matrix theta;
};

/// Sample covariance and entrywise variance of the products u_it u_jt.
/// Throws std::invalid_argument when T < 2.
ResidualMoments residual_moments(const Matrix& u_hat);

/// Keeps the diagonal, applies the shrinkage rule to the off-diagonals.
SymMatrix threshold_covariance(const SymMatrix& raw, const Matrix& tau,
                               const ShrinkageRule& rule);

/// Entry-dependent thresholds. `theta` is required for the adaptive style.
/// C = +inf yields tau = +inf everywhere.
Matrix build_tau(const ThresholdSpec& spec, const SymMatrix& raw, const Matrix* theta);

/// max_i sum_j |sigma_ij|^q; with q = 0 it counts nonzeros per row.
double sparsity_measure(const SymMatrix& sigma_u, double q);

/// True when every off-diagonal entry is exactly zero.
bool is_diagonal(const SymMatrix& s);

}  // namespace poet
