#include "poet/portfolio.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "poet/errors.hpp"
#include "poet/rng.hpp"

namespace poet {

namespace {

constexpr double kDegenerateFloor = 1e-12;

double quad(const Vector& w, const SymMatrix& s) { return w.dot(s.matrix() * w); }

PortfolioWeights normalize(const Vector& x) {
    const double denom = x.sum();
    if (!(denom > kDegenerateFloor)) {
        throw DegenerateObjectiveError("min_variance_weights: 1' Sigma^{-1} 1 = " +
                                       std::to_string(denom) + " <= 1e-12");
    }
    PortfolioWeights out;
    out.w = x / denom;
    out.gross_exposure = out.w.lpNorm<1>();
    return out;
}

}  // namespace

PortfolioWeights min_variance_weights(const SymMatrix& sigma) {
    const Index p = sigma.dim();
    if (p == 0) throw std::invalid_argument("min_variance_weights: empty matrix");
    if (!sigma.all_finite()) throw NonFiniteError("min_variance_weights: non-finite entries");
    const Vector ones = Vector::Ones(p);
    const Eigen::LLT<Matrix> llt(sigma.matrix());
    if (llt.info() == Eigen::Success && llt.rcond() > kPdTolerance) {
        return normalize(llt.solve(ones));
    }
    // Invertible but indefinite estimates still define the closed form.
    const Eigen::FullPivLU<Matrix> lu(sigma.matrix());
    if (!lu.isInvertible() || lu.rcond() <= kPdTolerance) {
        throw SingularMatrixError("min_variance_weights: covariance is singular",
                                  min_eigenvalue(sigma));
    }
    return normalize(lu.solve(ones));
}

PortfolioWeights min_variance_weights_from_precision(const SymMatrix& precision) {
    if (precision.dim() == 0) throw std::invalid_argument("min_variance_weights: empty matrix");
    return normalize(precision.matrix() * Vector::Ones(precision.dim()));
}

RiskMetrics risk_metrics(const Vector& w, const SymMatrix& sigma_true, const SymMatrix& sigma_hat) {
    if (w.size() != sigma_true.dim() || w.size() != sigma_hat.dim()) {
        throw std::invalid_argument("risk_metrics: dimension mismatch");
    }
    RiskMetrics r;
    r.actual = quad(w, sigma_true);
    r.empirical = quad(w, sigma_hat);
    r.oracle = quad(min_variance_weights(sigma_true).w, sigma_true);
    r.regret = r.actual - r.oracle;
    return r;
}

bool RiskErrorBounds::holds() const {
    constexpr double slack = 64 * std::numeric_limits<double>::epsilon();
    return absolute_lhs <= absolute_rhs * (1.0 + slack) + slack * std::abs(absolute_rhs) &&
           relative_lhs <= relative_rhs * (1.0 + slack) + slack;
}

RiskErrorBounds risk_error_bounds(const Vector& w, const SymMatrix& sigma_hat,
                                  const SymMatrix& sigma_true) {
    return risk_error_bounds(w, sigma_hat, sigma_true, inv_sqrt(sigma_true));
}

RiskErrorBounds risk_error_bounds(const Vector& w, const SymMatrix& sigma_hat,
                                  const SymMatrix& sigma_true, const SymMatrix& sigma_inv_sqrt) {
    if (w.size() != sigma_true.dim() || w.size() != sigma_hat.dim()) {
        throw std::invalid_argument("risk_error_bounds: dimension mismatch");
    }
    const double est = quad(w, sigma_hat);
    const double truth = quad(w, sigma_true);
    RiskErrorBounds b;
    b.gross_exposure = w.lpNorm<1>();
    b.absolute_lhs = std::abs(est - truth);
    b.absolute_rhs = norm_max(Matrix(sigma_hat.matrix() - sigma_true.matrix())) *
                     b.gross_exposure * b.gross_exposure;
    b.relative_lhs = std::abs(est / truth - 1.0);
    b.relative_rhs = relative_spectral_error_with(sigma_hat, sigma_inv_sqrt);
    return b;
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::poet: return "poet";
        case EstimatorKind::strict_factor: return "strict_factor";
        case EstimatorKind::sample: return "sample";
    }
    return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
    if (name == "poet") return EstimatorKind::poet;
    if (name == "strict_factor" || name == "sfm") return EstimatorKind::strict_factor;
    if (name == "sample") return EstimatorKind::sample;
    throw std::invalid_argument("unknown estimator kind '" + name + "'");
}

WindowEstimate estimate_window(const ReturnPanel& window, const EstimatorConfig& cfg,
                               std::uint64_t period_seed) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    switch (cfg.kind) {
        case EstimatorKind::sample:
            return {sample_covariance(window), 0, nan};
        case EstimatorKind::strict_factor: {
            PoetEstimate e = strict_factor_estimate(window, cfg.factors);
            return {std::move(e.Sigma_hat), e.K_used, e.C_used};
        }
        case EstimatorKind::poet: {
            const Index K = resolve_num_factors(window, cfg.factors);
            ThresholdSpec spec = cfg.spec;
            if (cfg.cross_validate) {
                CvConfig cv = cfg.cv;
                cv.seed = period_seed;
                cv.style = spec.style;
                const FactorFit fit = estimate_factors(window, K);
                spec.C = cross_validate_c(fit.U_hat, cfg.rule, cv).C_star;
            }
            PoetEstimate e = poet(window, FactorChoice::exactly(K), spec, cfg.rule);
            return {std::move(e.Sigma_hat), e.K_used, e.C_used};
        }
    }
    throw std::invalid_argument("estimate_window: unknown estimator kind");
}

BacktestReport backtest(const ReturnPanel& panel, const BacktestConfig& cfg) {
    if (cfg.window < 2 || cfg.rebalance_every < 1) {
        throw std::invalid_argument("backtest: window must be >= 2 and rebalance_every >= 1");
    }
    if (panel.T() < cfg.window + cfg.rebalance_every) {
        throw std::invalid_argument("backtest: panel has T = " + std::to_string(panel.T()) +
                                    " < window + rebalance_every = " +
                                    std::to_string(cfg.window + cfg.rebalance_every));
    }
    if (cfg.estimators.empty()) throw std::invalid_argument("backtest: no estimators configured");
    if (cfg.sigma_true && cfg.sigma_true->dim() != panel.p()) {
        throw std::invalid_argument("backtest: true covariance has the wrong dimension");
    }

    std::optional<double> oracle;
    if (cfg.sigma_true) {
        oracle = quad(min_variance_weights(*cfg.sigma_true).w, *cfg.sigma_true);
    }

    BacktestReport report;
    const auto n_est = static_cast<std::ptrdiff_t>(cfg.estimators.size());
    for (Index start = cfg.window; start + cfg.rebalance_every <= panel.T();
         start += cfg.rebalance_every) {
        const Index period = report.periods++;
        const ReturnPanel window = demean(panel.slice_time(start - cfg.window, cfg.window));
        const Matrix hold = panel.Y.middleCols(start, cfg.rebalance_every);
        const std::uint64_t period_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(period));

        std::vector<BacktestRow> rows(cfg.estimators.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t e = 0; e < n_est; ++e) {
            const EstimatorConfig& ec = cfg.estimators[static_cast<std::size_t>(e)];
            BacktestRow& row = rows[static_cast<std::size_t>(e)];
            row.period = period;
            row.start = start;
            row.estimator = ec.id;
            try {
                const WindowEstimate est = estimate_window(window, ec, period_seed);
                const PortfolioWeights w = min_variance_weights(est.sigma);
                row.K = est.K;
                row.C = est.C;
                const Vector r = hold.transpose() * w.w;
                row.realized_risk = r.squaredNorm() / static_cast<double>(hold.cols());
                row.empirical_risk = quad(w.w, est.sigma);
                row.gross_exposure = w.gross_exposure;
                row.max_weight = w.w.maxCoeff();
                row.min_weight = w.w.minCoeff();
                if (cfg.sigma_true) {
                    row.actual_risk = quad(w.w, *cfg.sigma_true);
                    row.oracle_risk = oracle;
                }
            } catch (const std::exception& ex) {
                row.failed = true;
                row.error = ex.what();
            }
        }
        bool any_failed = false;
        for (auto& row : rows) {
            any_failed = any_failed || row.failed;
            report.rows.push_back(std::move(row));
        }
        if (any_failed) report.failed_periods.push_back(period);
    }

    for (std::size_t e = 1; e < cfg.estimators.size(); ++e) {
        report.comparisons.push_back(
            compare_estimators(report, cfg.estimators[0].id, cfg.estimators[e].id));
    }
    return report;
}

PairwiseSummary compare_estimators(const BacktestReport& report, const std::string& estimator,
                                   const std::string& against) {
    PairwiseSummary s;
    s.estimator = estimator;
    s.against = against;
    double wins = 0.0;
    double reduction = 0.0;
    double increase = 0.0;
    Index n_wins = 0;
    Index n_losses = 0;
    for (Index period = 0; period < report.periods; ++period) {
        const BacktestRow* a = nullptr;
        const BacktestRow* b = nullptr;
        for (const auto& row : report.rows) {
            if (row.period != period) continue;
            if (row.estimator == estimator && a == nullptr) a = &row;
            if (row.estimator == against && b == nullptr && &row != a) b = &row;
        }
        if (a == nullptr || b == nullptr) {
            throw std::invalid_argument("compare_estimators: unknown estimator id");
        }
        if (a->failed || b->failed) continue;
        ++s.periods;
        if (a->realized_risk < b->realized_risk) {
            wins += 1.0;
            reduction += (b->realized_risk - a->realized_risk) / b->realized_risk;
            ++n_wins;
        } else if (a->realized_risk > b->realized_risk) {
            increase += (a->realized_risk - b->realized_risk) / b->realized_risk;
            ++n_losses;
        } else {
            wins += 0.5;
        }
    }
    if (s.periods > 0) s.win_fraction = wins / static_cast<double>(s.periods);
    if (n_wins > 0) s.mean_reduction_on_wins = reduction / static_cast<double>(n_wins);
    if (n_losses > 0) s.mean_increase_on_losses = increase / static_cast<double>(n_losses);
    return s;
}

}  // namespace poet
