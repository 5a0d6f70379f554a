#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "poet/linalg.hpp"
#include "poet/panel.hpp"
#include "poet/rng.hpp"

namespace poet {

/// Parameters of the calibrated three-factor generator. The defaults hold
/// the published loading moments and VAR(1) fit; the idiosyncratic-error
/// parameters (gamma and correlation) are synthetic stand-ins since their
/// fitted values are not published.
struct CalibrationParams {
    Eigen::Vector3d mu_B;
    Eigen::Matrix3d Sigma_B;
    Eigen::Vector3d mu_f;
    Eigen::Matrix3d Phi;
    Eigen::Matrix3d Sigma_eps;
    double gamma_shape = 16.0;  // sd of sigma_i: mean 0.4, sd 0.1
    double gamma_scale = 0.025;
    double corr_mean = 0.0;
    double corr_sd = 0.2;
    double corr_cap = 0.95;

    /// Table values; Sigma_eps is implied by the published cov(f_t).
    static CalibrationParams defaults();

    /// Published cov(f_t).
    static Eigen::Matrix3d published_factor_covariance();

    /// Gamma(shape, scale) with the given mean and standard deviation.
    void set_gamma_from_moments(double mean, double sd);

    /// Throws std::invalid_argument or NonStationaryError.
    void validate() const;
};

/// Key-value file: one `key = values` per line, '#' comments, matrices
/// row-major with comma separators. Keys: mu_B, Sigma_B, mu_f, Phi,
/// Sigma_eps, gamma_shape, gamma_scale, sigma_mean, sigma_sd (alternative to
/// the gamma pair), corr_mean, corr_sd, corr_cap. Missing keys keep defaults.
CalibrationParams read_calibration(const std::filesystem::path& path);
CalibrationParams parse_calibration(std::istream& in);
void write_calibration(const CalibrationParams& params, std::ostream& out);

/// Ground truth for a generated panel.
struct TrueModel {
    Matrix B;                  // p x K
    SymMatrix factor_cov;      // K x K, cov(f_t)
    SymMatrix Sigma_u;         // p x p
    SymMatrix Sigma;           // B cov(f) B' + Sigma_u
    Matrix F;                  // T x K realized factors (for known-factor estimators)
    std::string design;

    Index K() const noexcept { return B.cols(); }
    Index p() const noexcept { return Sigma.dim(); }
};

/// Solves C = Phi C Phi' + Sigma_eps through vec(C) = (I - Phi (x) Phi)^{-1} vec(Sigma_eps).
/// Throws NonStationaryError if the spectral radius of Phi is >= 1.
SymMatrix var1_stationary_covariance(const Matrix& phi, const SymMatrix& sigma_eps);

double spectral_radius(const Matrix& a);

/// Sigma_u = D Sigma_0 D with Gamma standard deviations in D and a
/// hard-thresholded random correlation matrix Sigma_0 (threshold lowered
/// from 1 in steps of 0.01 while Sigma_0 stays positive definite).
SymMatrix calibrate_error_covariance(const CalibrationParams& params, Index p,
                                     std::uint64_t seed);

/// Report of the threshold chosen for Sigma_0; exposed for diagnostics.
struct ErrorCovarianceDraw {
    SymMatrix Sigma_u;
    double correlation_threshold = 1.0;
};
ErrorCovarianceDraw draw_error_covariance(const CalibrationParams& params, Index p,
                                          std::uint64_t seed);

/// sigma_ij = decay^|i-j| for |i-j| <= bandwidth, zero beyond.
SymMatrix generate_banded_sigma_u(Index p, double decay = 0.5, Index bandwidth = 9);

/// Dense Toeplitz rho^|i-j|.
SymMatrix generate_ar1_sigma(Index p, double rho = 0.85);

/// Observed panel (not demeaned) plus its ground truth.
struct SimulatedPanel {
    ReturnPanel panel;
    TrueModel truth;
};

/// Loadings b_i ~ N(mu_B, Sigma_B), VAR(1) factors with a 500-step burn-in
/// from the stationary mean, errors N_p(0, Sigma_u). When `sigma_u` is not
/// supplied it is drawn with calibrate_error_covariance(params, p, seed).
SimulatedPanel simulate_calibrated(const CalibrationParams& params, Index p, Index T,
                                   std::uint64_t seed,
                                   const std::optional<SymMatrix>& sigma_u = std::nullopt);

/// y_t = B f_t + u_t with f_t ~ N(0, I_K), b_ji ~ N(0, 1), u_t ~ N_p(0, sigma_u).
/// K = 0 gives pure idiosyncratic data.
SimulatedPanel simulate_gaussian_factor_model(const SymMatrix& sigma_u, Index K, Index T,
                                              std::uint64_t seed, std::string design);

/// K-factor Gaussian model with the banded error covariance.
SimulatedPanel simulate_design2(Index p, Index T, Index K, std::uint64_t seed);

/// One factor, banded errors.
SimulatedPanel simulate_model1(Index p, Index T, std::uint64_t seed);
/// No factors, banded covariance.
SimulatedPanel simulate_model2(Index p, Index T, std::uint64_t seed);
/// No factors, AR(1) covariance with rho = 0.85.
SimulatedPanel simulate_model3(Index p, Index T, std::uint64_t seed);

/// Fits CalibrationParams from an observed panel: K = 3 principal
/// components, moments of the loadings, least-squares VAR(1) on the factors,
/// gamma moments of residual standard deviations and moments of residual
/// correlations whose magnitude is at most corr_cap.
CalibrationParams calibrate_from_panel(const ReturnPanel& panel, double corr_cap = 0.95);

}  // namespace poet
