#include "poet/montecarlo.hpp"

#include <cmath>
#include <stdexcept>

#include "poet/rng.hpp"

namespace poet {

std::string to_string(Design design) {
    switch (design) {
        case Design::calibrated: return "calibrated";
        case Design::design2: return "design2";
        case Design::model1: return "model1";
        case Design::model2: return "model2";
        case Design::model3: return "model3";
    }
    return "unknown";
}

Design parse_design(const std::string& name) {
    if (name == "calibrated" || name == "design1") return Design::calibrated;
    if (name == "design2") return Design::design2;
    if (name == "model1") return Design::model1;
    if (name == "model2") return Design::model2;
    if (name == "model3") return Design::model3;
    throw std::invalid_argument("unknown design '" + name + "'");
}

std::string to_string(McEstimatorKind kind) {
    switch (kind) {
        case McEstimatorKind::poet: return "poet";
        case McEstimatorKind::substitution: return "substitution";
        case McEstimatorKind::strict_factor: return "strict_factor";
        case McEstimatorKind::known_factors: return "known_factors";
        case McEstimatorKind::sample: return "sample";
    }
    return "unknown";
}

McEstimatorKind parse_mc_estimator_kind(const std::string& name) {
    if (name == "poet") return McEstimatorKind::poet;
    if (name == "substitution") return McEstimatorKind::substitution;
    if (name == "strict_factor" || name == "sfm") return McEstimatorKind::strict_factor;
    if (name == "known_factors" || name == "observed") return McEstimatorKind::known_factors;
    if (name == "sample") return McEstimatorKind::sample;
    throw std::invalid_argument("unknown estimator kind '" + name + "'");
}

void McConfig::validate() const {
    if (p < 1 || T < 2) throw std::invalid_argument("McConfig: need p >= 1 and T >= 2");
    if (reps < 1) throw std::invalid_argument("McConfig: reps must be >= 1");
    if (design_K < 0) throw std::invalid_argument("McConfig: design_K must be >= 0");
    if (estimators.empty()) throw std::invalid_argument("McConfig: no estimators configured");
    if (design == Design::calibrated) params.validate();
    for (const auto& e : estimators) {
        e.spec.validate();
        e.rule.validate();
    }
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "sigma_weighted",       "sigma_max",          "sigma_spectral",
        "sigma_relative",       "sigma_inv_spectral", "sigma_u_spectral",
        "sigma_u_inv_spectral", "loading_subspace_distance", "K",
        "C"};
    return names;
}

std::optional<double> metric_value(const McRow& row, const std::string& name) {
    const ErrorReport& e = row.errors;
    if (name == "sigma_weighted") return e.sigma_weighted;
    if (name == "sigma_max") return e.sigma_max;
    if (name == "sigma_spectral") return e.sigma_spectral;
    if (name == "sigma_relative") return e.sigma_relative;
    if (name == "sigma_inv_spectral") return e.sigma_inv_spectral;
    if (name == "sigma_u_spectral") return e.sigma_u_spectral;
    if (name == "sigma_u_inv_spectral") return e.sigma_u_inv_spectral;
    if (name == "loading_subspace_distance") return e.loading_subspace_distance;
    if (name == "K") return static_cast<double>(row.K);
    if (name == "C") {
        if (std::isnan(row.C)) return std::nullopt;
        return row.C;
    }
    throw std::invalid_argument("unknown metric '" + name + "'");
}

SimulatedPanel simulate_replication(const McConfig& cfg, Index rep,
                                    const std::optional<SymMatrix>& sigma_u) {
    const std::uint64_t s = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    switch (cfg.design) {
        case Design::calibrated: return simulate_calibrated(cfg.params, cfg.p, cfg.T, s, sigma_u);
        case Design::design2: return simulate_design2(cfg.p, cfg.T, cfg.design_K, s);
        case Design::model1: return simulate_model1(cfg.p, cfg.T, s);
        case Design::model2: return simulate_model2(cfg.p, cfg.T, s);
        case Design::model3: return simulate_model3(cfg.p, cfg.T, s);
    }
    throw std::invalid_argument("simulate_replication: unknown design");
}

namespace {

McRow evaluate_one(const ReturnPanel& panel, const TrueModel& truth, const TruthInverses& inv,
                   const McEstimator& est, std::uint64_t rep_seed) {
    McRow row;
    row.estimator = est.id;
    row.C = std::nan("");
    try {
        if (est.kind == McEstimatorKind::sample) {
            const SymMatrix s = sample_covariance(panel);
            row.errors = evaluate_covariance(s, nullptr, nullptr, nullptr, truth, inv);
            return row;
        }
        PoetEstimate e;
        switch (est.kind) {
            case McEstimatorKind::poet:
            case McEstimatorKind::substitution: {
                ThresholdSpec spec = est.spec;
                FactorChoice k = est.factors;
                if (est.cross_validate) {
                    const Index K = resolve_num_factors(panel, est.factors);
                    CvConfig cv = est.cv;
                    cv.seed = rep_seed;
                    cv.style = spec.style;
                    spec.C = cross_validate_c(estimate_factors(panel, K).U_hat, est.rule, cv).C_star;
                    k = FactorChoice::exactly(K);
                }
                e = est.kind == McEstimatorKind::poet ? poet(panel, k, spec, est.rule)
                                                      : poet_substitution(panel, k, spec, est.rule);
                break;
            }
            case McEstimatorKind::strict_factor:
                e = strict_factor_estimate(panel, est.factors);
                break;
            case McEstimatorKind::known_factors:
                e = known_factor_estimate(panel, truth.F, est.spec, est.rule);
                break;
            case McEstimatorKind::sample:
                break;
        }
        row.K = e.K_used;
        row.C = e.C_used;
        try {
            e = precision_woodbury(e);
        } catch (const NumericalError&) {
            // Inverse-based metrics are then computed directly where possible.
        }
        row.errors = evaluate_against_truth(e, truth, inv);
    } catch (const std::exception& ex) {
        row.failed = true;
        row.error = ex.what();
    }
    return row;
}

}  // namespace

McResult run_monte_carlo(const McConfig& cfg) {
    cfg.validate();
    std::optional<SymMatrix> sigma_u;
    if (cfg.design == Design::calibrated) {
        sigma_u = calibrate_error_covariance(cfg.params, cfg.p, cfg.seed);
    }
    // Designs without factors have a fixed truth; invert it once.
    std::optional<TruthInverses> fixed_inverses;
    if (cfg.design == Design::model2 || cfg.design == Design::model3) {
        fixed_inverses = TruthInverses::from(simulate_replication(cfg, 0, sigma_u).truth);
    }

    const std::size_t n_est = cfg.estimators.size();
    std::vector<McRow> rows(static_cast<std::size_t>(cfg.reps) * n_est);
    const auto reps = static_cast<std::ptrdiff_t>(cfg.reps);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < reps; ++r) {
        const auto base = static_cast<std::size_t>(r) * n_est;
        try {
            SimulatedPanel sim = simulate_replication(cfg, r, sigma_u);
            const ReturnPanel panel = demean(sim.panel);
            const TruthInverses inv =
                fixed_inverses ? *fixed_inverses : TruthInverses::from(sim.truth);
            const std::uint64_t rep_seed =
                derive_seed(cfg.seed ^ 0xC5C5C5C5ULL, static_cast<std::uint64_t>(r));
            for (std::size_t e = 0; e < n_est; ++e) {
                rows[base + e] = evaluate_one(panel, sim.truth, inv, cfg.estimators[e], rep_seed);
                rows[base + e].rep = r;
            }
        } catch (const std::exception& ex) {
            for (std::size_t e = 0; e < n_est; ++e) {
                rows[base + e].rep = r;
                rows[base + e].estimator = cfg.estimators[e].id;
                rows[base + e].failed = true;
                rows[base + e].error = ex.what();
            }
        }
    }
    McResult out;
    out.summary = summarize(rows, cfg.estimators);
    out.rows = std::move(rows);
    return out;
}

std::vector<McSummary> summarize(const std::vector<McRow>& rows,
                                 const std::vector<McEstimator>& estimators) {
    std::vector<McSummary> out;
    for (const auto& est : estimators) {
        McSummary s;
        s.estimator = est.id;
        for (const auto& name : metric_names()) {
            double sum = 0.0;
            Index n = 0;
            for (const auto& row : rows) {
                if (row.estimator != est.id || row.failed) continue;
                if (auto v = metric_value(row, name)) {
                    sum += *v;
                    ++n;
                }
            }
            if (n == 0) continue;
            McStat st;
            st.count = n;
            st.mean = sum / static_cast<double>(n);
            double ss = 0.0;
            for (const auto& row : rows) {
                if (row.estimator != est.id || row.failed) continue;
                if (auto v = metric_value(row, name)) ss += (*v - st.mean) * (*v - st.mean);
            }
            st.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
            s.metrics[name] = st;
        }
        for (const auto& row : rows) {
            if (row.estimator == est.id && row.failed) ++s.failures;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace poet
