#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/shrinkage.hpp"
#include "poet/threshold.hpp"

namespace poet {

struct EigenCurvePoint {
    double C = 0.0;
    double lambda_min = 0.0;
};

/// Thresholded residual covariance at constant C. `family` supplies the
/// style and a resolved omega; its own C is ignored.
SymMatrix thresholded_at(const ResidualMoments& moments, const ThresholdSpec& family,
                         const ShrinkageRule& rule, double C);

/// lambda_min of the thresholded residual covariance for each C in `grid`.
std::vector<EigenCurvePoint> min_eigenvalue_curve(const ResidualMoments& moments,
                                                  const ThresholdSpec& family,
                                                  const ShrinkageRule& rule,
                                                  const std::vector<double>& grid);
/// Same, with moments and omega(p, T) taken from the p x T residuals.
std::vector<EigenCurvePoint> min_eigenvalue_curve(const Matrix& u_hat,
                                                  const ShrinkageRule& rule,
                                                  const std::vector<double>& grid,
                                                  ThresholdStyle style =
                                                      ThresholdStyle::adaptive_theta);

/// Smallest C found by doubling from 1 at which the thresholded matrix is
/// diagonal. Returns 0 when it is already diagonal at C = 0.
double diagonalizing_constant(const ResidualMoments& moments, const ThresholdSpec& family,
                              const ShrinkageRule& rule);

struct CminSearch {
    double C_min = 0.0;
    double M = 0.0;  // diagonalizing constant bounding the search
    std::vector<EigenCurvePoint> curve;
};

inline constexpr double kDefaultCminResolution = 1e-3;
inline constexpr Index kCminGridPoints = 200;

/// Smallest C such that the thresholded matrix is positive definite at C
/// and at every sampled C' > C on a uniform grid over [0, M]; the bracket
/// around the last non-PD grid point is refined by bisection.
/// Throws std::invalid_argument if some residual variance is not positive.
CminSearch c_min_search(const ResidualMoments& moments, const ThresholdSpec& family,
                        const ShrinkageRule& rule,
                        double resolution = kDefaultCminResolution);
double c_min(const ResidualMoments& moments, const ThresholdSpec& family,
             const ShrinkageRule& rule, double resolution = kDefaultCminResolution);
double c_min(const Matrix& u_hat, const ShrinkageRule& rule,
             double resolution = kDefaultCminResolution,
             ThresholdStyle style = ThresholdStyle::adaptive_theta);

enum class SplitScheme { contiguous_block, iid };

struct CvConfig {
    Index H = 10;
    double epsilon = 0.05;
    Index grid_points = 50;
    /// Explicit candidate constants; clipped to [C_min + epsilon, inf).
    std::optional<std::vector<double>> grid;
    std::uint64_t seed = 0;
    SplitScheme split = SplitScheme::contiguous_block;
    ThresholdStyle style = ThresholdStyle::adaptive_theta;

    void validate() const;
};

struct CvSplit {
    std::vector<Index> train;
    std::vector<Index> validation;
};

/// round(T (1 - 1/log T)), kept inside [1, T - 1].
Index cv_train_size(Index T);

/// The H splits used by cross_validate_c; deterministic in (T, cfg.seed).
std::vector<CvSplit> make_cv_splits(Index T, const CvConfig& cfg);

struct CvPoint {
    double C = 0.0;
    double score = 0.0;  // mean over splits of ||thresholded(train) - validation||_F^2
};

struct CvResult {
    double C_star = 0.0;
    double C_min = 0.0;
    double M = 0.0;
    std::vector<CvPoint> curve;
};

/// Minimizes the split-averaged Frobenius loss over the grid, skipping any
/// C at which the full-sample thresholded matrix is not positive definite.
/// Ties go to the smallest C. Throws std::invalid_argument when no admissible
/// grid point remains.
CvResult cross_validate_c(const Matrix& u_hat, const ShrinkageRule& rule, const CvConfig& cfg);

/// Cross-validation score of one split at the given constants.
std::vector<double> cv_split_scores(const Matrix& u_hat, const CvSplit& split,
                                    const ShrinkageRule& rule, ThresholdStyle style,
                                    const std::vector<double>& grid);

}  // namespace poet
