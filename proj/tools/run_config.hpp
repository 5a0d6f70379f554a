#pragma once

#include <cstdint>
#include <string>

#include "poet/montecarlo.hpp"
#include "poet/portfolio.hpp"
#include "poet/serialize.hpp"

// A run configuration is a flat JSON object per command. Flags fill it, a
// config file is merged over it, and the merged object is what the command
// executes and what meta.json records.
namespace poet::cli {

/// Every key a command accepts, with its default value.
Json default_config(const std::string& command);

/// `overrides` wins on every key it sets. Throws std::invalid_argument when
/// it names a key the command does not know.
Json merge_config(const Json& base, const Json& overrides, const std::string& command);

std::uint64_t seed_of(const Json& cfg);

/// "auto" or a non-negative integer under "K", plus "max_factors" and "ic".
FactorChoice factor_choice_from(const Json& cfg);
ThresholdSpec threshold_from(const Json& cfg);
ShrinkageRule rule_from(const Json& cfg);
CvConfig cv_from(const Json& cfg, std::uint64_t seed);
CsvOptions csv_options_from(const Json& cfg);

/// Parses "kind" or "kind:key=value,key=value" into an estimator object.
/// Values that look numeric become numbers, true/false become booleans.
Json parse_estimator_flag(const std::string& text);

McEstimator mc_estimator_from(const Json& obj, Index index);
EstimatorConfig backtest_estimator_from(const Json& obj, Index index);

McConfig mc_config_from(const Json& cfg);
BacktestConfig backtest_config_from(const Json& cfg);

}  // namespace poet::cli
