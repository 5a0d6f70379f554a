#pragma once

#include <optional>
#include <string>

#include "poet/errors.hpp"
#include "poet/factors.hpp"
#include "poet/linalg.hpp"
#include "poet/panel.hpp"
#include "poet/shrinkage.hpp"
#include "poet/simulate.hpp"
#include "poet/threshold.hpp"

namespace poet {

/// Number of factors: fixed, or chosen by the information criterion.
struct FactorChoice {
    std::optional<Index> fixed;
    Index max_factors = kDefaultMaxFactors;
    IcVariant variant = IcVariant::ic1;

    static FactorChoice exactly(Index k) { return FactorChoice{k}; }
    static FactorChoice automatic(Index m = kDefaultMaxFactors, IcVariant v = IcVariant::ic1) {
        return FactorChoice{std::nullopt, m, v};
    }
};

/// K itself, or the information-criterion choice with M capped at min(p, T) - 1.
Index resolve_num_factors(const ReturnPanel& panel, const FactorChoice& choice);

struct PoetEstimate {
    SymMatrix Sigma_hat;    // low_rank + thresholded complement
    SymMatrix Sigma_u_hat;  // thresholded complement / idiosyncratic covariance
    SymMatrix low_rank;     // leading K principal components (= Lambda Lambda')
    Index K_used = 0;
    double C_used = 0.0;
    ShrinkageRule rule;
    ThresholdSpec spec;  // with omega resolved
    FactorFit factor_fit;
    std::optional<FactorSelection> selection;

    std::optional<SymMatrix> precision_sigma_u;
    std::optional<SymMatrix> precision_sigma;
    std::optional<double> woodbury_residual;  // ||Sigma_hat * precision - I||_max
};

struct PrincipalComplement {
    SymMatrix low_rank;  // sum_{i <= K} lambda_i xi_i xi_i'
    SymMatrix R_K;       // Sigma_sam - low_rank
};

/// Throws std::invalid_argument when K is outside [0, p].
PrincipalComplement principal_complement(const SymMatrix& sigma_sam, Index K);
PrincipalComplement principal_complement(const SymMatrix& sigma_sam,
                                         const SymmetricSpectrum& spectrum, Index K);

/// Spectral route: threshold the principal orthogonal complement of the
/// sample covariance. The panel is expected to be demeaned. The adaptive
/// threshold is built from the least-squares residuals of the same K, so it
/// coincides with the substitution route's threshold.
PoetEstimate poet(const ReturnPanel& panel, const FactorChoice& k, const ThresholdSpec& spec,
                  const ShrinkageRule& rule);

/// Least-squares route: Lambda Lambda' plus the thresholded residual covariance.
PoetEstimate poet_substitution(const ReturnPanel& panel, const FactorChoice& k,
                               const ThresholdSpec& spec, const ShrinkageRule& rule);

/// Strict factor model: POET with every off-diagonal of the complement removed.
PoetEstimate strict_factor_estimate(const ReturnPanel& panel, const FactorChoice& k);

/// Covariance estimate with observed factors F (T x K): OLS loadings,
/// thresholded residual covariance, B cov(F) B' + Sigma_u.
PoetEstimate known_factor_estimate(const ReturnPanel& panel, const Matrix& factors,
                                   const ThresholdSpec& spec, const ShrinkageRule& rule);

/// Fills the precision fields through Sherman-Morrison-Woodbury. Throws
/// SingularIdiosyncraticError when Sigma_u_hat is not positive definite.
PoetEstimate precision_woodbury(PoetEstimate estimate);

/// Precomputed functions of the truth, reused across replications.
struct TruthInverses {
    SymMatrix sigma_inv_sqrt;
    SymMatrix sigma_inv;
    std::optional<SymMatrix> sigma_u_inv;

    /// Throws SingularMatrixError when Sigma is not positive definite.
    static TruthInverses from(const TrueModel& truth);
};

struct ErrorReport {
    double sigma_weighted = 0.0;  // ||Sigma_hat - Sigma||_Sigma
    double sigma_max = 0.0;
    double sigma_spectral = 0.0;
    double sigma_relative = 0.0;  // ||Sigma^{-1/2} Sigma_hat Sigma^{-1/2} - I||
    std::optional<double> sigma_inv_spectral;
    std::optional<double> sigma_u_spectral;
    std::optional<double> sigma_u_inv_spectral;
    /// Sine of the largest principal angle between span(Lambda_hat) and span(B).
    std::optional<double> loading_subspace_distance;
};

ErrorReport evaluate_against_truth(const PoetEstimate& estimate, const TrueModel& truth);
ErrorReport evaluate_against_truth(const PoetEstimate& estimate, const TrueModel& truth,
                                   const TruthInverses& inverses);

/// Metrics for an arbitrary covariance estimate (e.g. the sample covariance).
/// Missing inverses are computed when possible (through LU when the matrix is
/// not positive definite) and left empty when it is singular.
ErrorReport evaluate_covariance(const SymMatrix& sigma_hat, const SymMatrix* sigma_u_hat,
                                const SymMatrix* precision, const SymMatrix* precision_u,
                                const TrueModel& truth, const TruthInverses& inverses);

/// sin of the largest principal angle between the column spaces.
double subspace_distance(const Matrix& a, const Matrix& b);

}  // namespace poet
