#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "poet/estimator.hpp"
#include "poet/montecarlo.hpp"
#include "poet/portfolio.hpp"
#include "poet/selection.hpp"

namespace poet {

using Json = nlohmann::ordered_json;

/// Finite values as numbers; +-inf and NaN as the strings "inf", "-inf", "nan"
/// so that the JSON stays valid and lossless.
Json number_json(double v);
double number_from_json(const Json& j);

Json to_json(const ThresholdSpec& spec);
Json to_json(const ShrinkageRule& rule);
Json to_json(const FactorSelection& selection);
Json to_json(const ErrorReport& report);
Json to_json(const CvResult& result);
Json to_json(const PairwiseSummary& summary);

/// K, C, rule, threshold, norms of the parts and residual diagnostics.
Json estimate_meta(const PoetEstimate& estimate);

/// Writes Sigma_hat.csv, Sigma_u_hat.csv, precision.csv (when available),
/// loadings.csv and factors.csv into `dir` with asset and time labels.
void write_estimate_matrices(const PoetEstimate& estimate, const ReturnPanel& panel,
                             const std::filesystem::path& dir);

/// Pretty-printed with a trailing newline.
void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

void write_ic_curve_csv(const FactorSelection& selection, const std::filesystem::path& path);
void write_eigen_curve_csv(const std::vector<EigenCurvePoint>& curve,
                           const std::filesystem::path& path);
void write_cv_curve_csv(const CvResult& result, const std::filesystem::path& path);

/// One row per replication and estimator; empty cells for absent metrics.
void write_mc_rows_csv(const McResult& result, const std::filesystem::path& path);
/// One row per estimator and metric: mean, sd, count.
void write_mc_summary_csv(const McResult& result, const std::filesystem::path& path);

/// One row per period and estimator.
void write_backtest_csv(const BacktestReport& report, const std::filesystem::path& path);

}  // namespace poet
