#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poet/estimator.hpp"
#include "poet/linalg.hpp"
#include "poet/panel.hpp"
#include "poet/selection.hpp"

namespace poet {

struct PortfolioWeights {
    Vector w;                     // sums to one
    double gross_exposure = 0.0;  // ||w||_1
};

/// Global minimum-variance weights Sigma^{-1} 1 / (1' Sigma^{-1} 1).
/// Throws SingularMatrixError when sigma is not invertible and
/// DegenerateObjectiveError when 1' Sigma^{-1} 1 <= 1e-12.
PortfolioWeights min_variance_weights(const SymMatrix& sigma);
/// Same weights from a precomputed precision matrix.
PortfolioWeights min_variance_weights_from_precision(const SymMatrix& precision);

struct RiskMetrics {
    double actual = 0.0;     // w' Sigma w
    double empirical = 0.0;  // w' Sigma_hat w
    double oracle = 0.0;     // min over w'1 = 1 of w' Sigma w
    double regret = 0.0;     // actual - oracle
};

RiskMetrics risk_metrics(const Vector& w, const SymMatrix& sigma_true,
                         const SymMatrix& sigma_hat);

/// Both sides of |w'S w - w'Sigma w| <= ||S - Sigma||_max ||w||_1^2 and of
/// |w'S w / w'Sigma w - 1| <= ||Sigma^{-1/2} S Sigma^{-1/2} - I||.
struct RiskErrorBounds {
    double absolute_lhs = 0.0;
    double absolute_rhs = 0.0;
    double relative_lhs = 0.0;
    double relative_rhs = 0.0;
    double gross_exposure = 0.0;

    /// Both inequalities, allowing a few ulps of rounding on the right side.
    bool holds() const;
};

RiskErrorBounds risk_error_bounds(const Vector& w, const SymMatrix& sigma_hat,
                                  const SymMatrix& sigma_true);
RiskErrorBounds risk_error_bounds(const Vector& w, const SymMatrix& sigma_hat,
                                  const SymMatrix& sigma_true, const SymMatrix& sigma_inv_sqrt);

enum class EstimatorKind { poet, strict_factor, sample };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);

/// One covariance estimator of the backtest. For `poet` the threshold
/// constant is `spec.C` unless `cross_validate` is set.
struct EstimatorConfig {
    std::string id;
    EstimatorKind kind = EstimatorKind::poet;
    FactorChoice factors = FactorChoice::automatic();
    ThresholdSpec spec;
    ShrinkageRule rule = ShrinkageRule::soft();
    bool cross_validate = false;
    CvConfig cv;
};

/// Covariance estimate from a demeaned window. Returns the estimate together
/// with the threshold constant actually used (NaN when not applicable).
struct WindowEstimate {
    SymMatrix sigma;
    Index K = 0;
    double C = 0.0;
};
WindowEstimate estimate_window(const ReturnPanel& window, const EstimatorConfig& cfg,
                               std::uint64_t period_seed);

struct BacktestConfig {
    Index window = 252;
    Index rebalance_every = 21;
    std::vector<EstimatorConfig> estimators;
    std::uint64_t seed = 0;
    /// When the true covariance is known (simulated panels) actual and oracle
    /// risks are reported alongside the realized ones.
    std::optional<SymMatrix> sigma_true;
};

struct BacktestRow {
    Index period = 0;
    Index start = 0;  // first column of the holding period
    std::string estimator;
    bool failed = false;
    std::string error;
    Index K = 0;
    double C = 0.0;
    double realized_risk = 0.0;   // w' (1/h) sum y_t y_t' w over the holding period
    double empirical_risk = 0.0;  // w' Sigma_hat w
    double gross_exposure = 0.0;
    double max_weight = 0.0;
    double min_weight = 0.0;
    std::optional<double> actual_risk;
    std::optional<double> oracle_risk;
};

/// Estimator 0 against one other estimator over the periods where both
/// succeeded. Ties count half a win.
struct PairwiseSummary {
    std::string estimator;
    std::string against;
    Index periods = 0;
    double win_fraction = 0.0;
    double mean_reduction_on_wins = 0.0;  // mean of (R_other - R_0) / R_other
    double mean_increase_on_losses = 0.0;  // mean of (R_0 - R_other) / R_other
};

struct BacktestReport {
    Index periods = 0;
    std::vector<BacktestRow> rows;  // period-major, estimator order within a period
    std::vector<PairwiseSummary> comparisons;
    std::vector<Index> failed_periods;
};

/// Rolling minimum-variance backtest. Each period fits every estimator on the
/// trailing window (demeaned within the window), then realizes risk over the
/// next `rebalance_every` raw observations. Throws std::invalid_argument when
/// T < window + rebalance_every or no estimator is configured.
BacktestReport backtest(const ReturnPanel& panel, const BacktestConfig& cfg);

/// Aggregates for an arbitrary pair of estimator ids.
PairwiseSummary compare_estimators(const BacktestReport& report, const std::string& estimator,
                                   const std::string& against);

}  // namespace poet
