#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poet/estimator.hpp"
#include "poet/selection.hpp"
#include "poet/simulate.hpp"

namespace poet {

enum class Design {
    calibrated,  // three-factor model calibrated to equity returns
    design2,     // Gaussian factors and loadings, banded errors
    model1,      // one Gaussian factor, banded errors
    model2,      // no factors, banded covariance
    model3,      // no factors, AR(1) covariance
};

std::string to_string(Design design);
Design parse_design(const std::string& name);

enum class McEstimatorKind {
    poet,           // spectral route
    substitution,   // least-squares route
    strict_factor,  // diagonal idiosyncratic covariance
    known_factors,  // regression on the realized true factors
    sample,
};

std::string to_string(McEstimatorKind kind);
McEstimatorKind parse_mc_estimator_kind(const std::string& name);

struct McEstimator {
    std::string id;
    McEstimatorKind kind = McEstimatorKind::poet;
    FactorChoice factors = FactorChoice::automatic();
    ThresholdSpec spec;
    ShrinkageRule rule = ShrinkageRule::hard();
    bool cross_validate = false;
    CvConfig cv;
};

struct McConfig {
    Design design = Design::calibrated;
    Index p = 100;
    Index T = 300;
    Index reps = 50;
    std::uint64_t seed = 0;
    Index design_K = 3;  // factor count of design2
    CalibrationParams params = CalibrationParams::defaults();
    std::vector<McEstimator> estimators;

    void validate() const;
};

struct McRow {
    Index rep = 0;
    std::string estimator;
    bool failed = false;
    std::string error;
    Index K = 0;
    double C = 0.0;
    ErrorReport errors;
};

struct McStat {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (divisor n - 1)
    Index count = 0;
};

struct McSummary {
    std::string estimator;
    Index failures = 0;
    std::map<std::string, McStat> metrics;  // metric name -> statistics over successful reps
};

struct McResult {
    std::vector<McRow> rows;  // rep-major, estimator order within a rep
    std::vector<McSummary> summary;
};

/// Metric names in report order, and their value in an ErrorReport (absent
/// optional metrics return nullopt). K is reported as metric "K".
const std::vector<std::string>& metric_names();
std::optional<double> metric_value(const McRow& row, const std::string& name);

/// One simulated panel of the design for replication `rep`.
SimulatedPanel simulate_replication(const McConfig& cfg, Index rep,
                                    const std::optional<SymMatrix>& sigma_u);

/// Runs all replications in parallel; each uses the stream derive_seed(seed,
/// rep) so the result does not depend on the thread count.
McResult run_monte_carlo(const McConfig& cfg);

/// Mean and sample standard deviation per estimator and metric, computed in
/// replication order.
std::vector<McSummary> summarize(const std::vector<McRow>& rows,
                                 const std::vector<McEstimator>& estimators);

}  // namespace poet
