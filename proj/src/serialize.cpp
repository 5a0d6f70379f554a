#include "poet/serialize.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace poet {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> factor_labels(Index K) {
    std::vector<std::string> out;
    for (Index k = 0; k < K; ++k) out.push_back("f" + std::to_string(k + 1));
    return out;
}

// Quote only when a label would break the row.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

Json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
        if (s == "nan") return std::nan("");
    }
    throw std::invalid_argument("expected a number, got " + j.dump());
}

Json to_json(const ThresholdSpec& spec) {
    Json j;
    j["C"] = number_json(spec.C);
    j["style"] = to_string(spec.style);
    if (spec.omega) j["omega"] = number_json(*spec.omega);
    return j;
}

Json to_json(const ShrinkageRule& rule) {
    Json j;
    j["name"] = rule.name();
    if (rule.kind == ShrinkageKind::scad) j["a"] = rule.scad_a;
    if (rule.kind == ShrinkageKind::adaptive_lasso) j["eta"] = rule.al_eta;
    return j;
}

Json to_json(const FactorSelection& selection) {
    Json j;
    j["K_hat"] = selection.K_hat;
    j["exact_low_rank"] = selection.exact_low_rank;
    Json curve = Json::array();
    for (const auto& pt : selection.curve) {
        curve.push_back({{"K", pt.K},
                         {"log_residual", number_json(pt.log_residual)},
                         {"penalty", number_json(pt.penalty)},
                         {"total", number_json(pt.total)}});
    }
    j["curve"] = std::move(curve);
    return j;
}

Json to_json(const ErrorReport& r) {
    Json j;
    j["sigma_weighted"] = number_json(r.sigma_weighted);
    j["sigma_max"] = number_json(r.sigma_max);
    j["sigma_spectral"] = number_json(r.sigma_spectral);
    j["sigma_relative"] = number_json(r.sigma_relative);
    auto opt = [&](const char* name, const std::optional<double>& v) {
        j[name] = v ? number_json(*v) : Json(nullptr);
    };
    opt("sigma_inv_spectral", r.sigma_inv_spectral);
    opt("sigma_u_spectral", r.sigma_u_spectral);
    opt("sigma_u_inv_spectral", r.sigma_u_inv_spectral);
    opt("loading_subspace_distance", r.loading_subspace_distance);
    return j;
}

Json to_json(const CvResult& r) {
    Json j;
    j["C_star"] = number_json(r.C_star);
    j["C_min"] = number_json(r.C_min);
    j["M"] = number_json(r.M);
    j["grid_size"] = r.curve.size();
    return j;
}

Json to_json(const PairwiseSummary& s) {
    Json j;
    j["estimator"] = s.estimator;
    j["against"] = s.against;
    j["periods"] = s.periods;
    j["win_fraction"] = number_json(s.win_fraction);
    j["mean_reduction_on_wins"] = number_json(s.mean_reduction_on_wins);
    j["mean_increase_on_losses"] = number_json(s.mean_increase_on_losses);
    return j;
}

Json estimate_meta(const PoetEstimate& e) {
    Json j;
    j["K"] = e.K_used;
    j["C"] = number_json(e.C_used);
    j["rule"] = to_json(e.rule);
    j["threshold"] = to_json(e.spec);
    if (e.selection) j["factor_selection"] = to_json(*e.selection);
    const Index p = e.Sigma_hat.dim();
    Index nonzero = 0;
    for (Index c = 0; c < p; ++c) {
        for (Index r = c + 1; r < p; ++r) nonzero += e.Sigma_u_hat(r, c) != 0.0 ? 1 : 0;
    }
    j["p"] = p;
    j["sigma_u_offdiagonal_nonzero"] = nonzero;
    j["sigma_u_sparsity_q0"] = number_json(sparsity_measure(e.Sigma_u_hat, 0.0));
    j["sigma_u_min_eigenvalue"] = number_json(min_eigenvalue(e.Sigma_u_hat));
    Json norms;
    norms["sigma_hat_spectral"] = number_json(norm_spectral(e.Sigma_hat));
    norms["sigma_hat_frobenius"] = number_json(norm_frobenius(e.Sigma_hat));
    norms["sigma_u_hat_spectral"] = number_json(norm_spectral(e.Sigma_u_hat));
    norms["sigma_u_hat_max_offdiagonal"] = [&] {
        double m = 0.0;
        for (Index c = 0; c < p; ++c) {
            for (Index r = c + 1; r < p; ++r) m = std::max(m, std::abs(e.Sigma_u_hat(r, c)));
        }
        return number_json(m);
    }();
    j["norms"] = std::move(norms);
    j["precision_available"] = e.precision_sigma.has_value();
    j["woodbury_residual"] = e.woodbury_residual ? number_json(*e.woodbury_residual) : Json(nullptr);
    return j;
}

void write_estimate_matrices(const PoetEstimate& e, const ReturnPanel& panel,
                             const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& ids = panel.asset_ids;
    const auto fl = factor_labels(e.factor_fit.Lambda_hat.cols());
    write_matrix_csv(e.Sigma_hat.matrix(), dir / "Sigma_hat.csv", ids, ids);
    write_matrix_csv(e.Sigma_u_hat.matrix(), dir / "Sigma_u_hat.csv", ids, ids);
    if (e.precision_sigma) write_matrix_csv(e.precision_sigma->matrix(), dir / "precision.csv", ids, ids);
    write_matrix_csv(e.factor_fit.Lambda_hat, dir / "loadings.csv", ids, fl);
    write_matrix_csv(e.factor_fit.F_hat, dir / "factors.csv", panel.timestamps, fl);
}

void write_json(const Json& j, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return Json::parse(in);
}

void write_ic_curve_csv(const FactorSelection& selection, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "K,log_residual,penalty,total\n";
    for (const auto& pt : selection.curve) {
        out << pt.K << ',' << format_double(pt.log_residual) << ',' << format_double(pt.penalty)
            << ',' << format_double(pt.total) << '\n';
    }
}

void write_eigen_curve_csv(const std::vector<EigenCurvePoint>& curve,
                           const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "C,lambda_min\n";
    for (const auto& pt : curve) out << format_double(pt.C) << ',' << format_double(pt.lambda_min) << '\n';
}

void write_cv_curve_csv(const CvResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "C,score\n";
    for (const auto& pt : result.curve) out << format_double(pt.C) << ',' << format_double(pt.score) << '\n';
}

void write_mc_rows_csv(const McResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "rep,estimator,failed";
    for (const auto& name : metric_names()) out << ',' << name;
    out << ",error\n";
    for (const auto& row : result.rows) {
        out << row.rep << ',' << csv_field(row.estimator) << ',' << (row.failed ? 1 : 0);
        for (const auto& name : metric_names()) {
            out << ',' << (row.failed ? std::string() : cell(metric_value(row, name)));
        }
        out << ',' << csv_field(row.error) << '\n';
    }
}

void write_mc_summary_csv(const McResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "estimator,metric,mean,sd,count,failures\n";
    for (const auto& s : result.summary) {
        for (const auto& name : metric_names()) {
            auto it = s.metrics.find(name);
            if (it == s.metrics.end()) continue;
            out << csv_field(s.estimator) << ',' << name << ',' << format_double(it->second.mean)
                << ',' << format_double(it->second.sd) << ',' << it->second.count << ','
                << s.failures << '\n';
        }
    }
}

void write_backtest_csv(const BacktestReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "period,start,estimator,failed,K,C,realized_risk,empirical_risk,gross_exposure,"
           "max_weight,min_weight,actual_risk,oracle_risk,error\n";
    for (const auto& r : report.rows) {
        out << r.period << ',' << r.start << ',' << csv_field(r.estimator) << ','
            << (r.failed ? 1 : 0) << ',';
        if (r.failed) {
            out << ",,,,,,,,," << csv_field(r.error) << '\n';
            continue;
        }
        out << r.K << ',' << format_double(r.C) << ',' << format_double(r.realized_risk) << ','
            << format_double(r.empirical_risk) << ',' << format_double(r.gross_exposure) << ','
            << format_double(r.max_weight) << ',' << format_double(r.min_weight) << ','
            << cell(r.actual_risk) << ',' << cell(r.oracle_risk) << ",\n";
    }
}

}  // namespace poet
