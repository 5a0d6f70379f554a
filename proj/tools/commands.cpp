#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "poet/kernels.hpp"
#include "run_config.hpp"

namespace poet::cli {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string>& help_texts() {
    static const std::map<std::string, std::string> h = {
        {"input", "return panel CSV"},
        {"orientation", "assets_as_columns or assets_as_rows"},
        {"label_column", "detect, present or absent"},
        {"demean", "subtract each asset's mean before estimating"},
        {"K", "number of factors, or auto for the information criterion"},
        {"max_factors", "largest K considered by the information criterion"},
        {"ic", "information criterion: ic1 or ic2"},
        {"C", "threshold constant (inf removes every off-diagonal)"},
        {"style", "threshold style: adaptive_theta, correlation or constant"},
        {"rule", "shrinkage rule: hard, soft, scad or adaptive_lasso"},
        {"scad_a", "SCAD parameter a (> 2)"},
        {"al_eta", "adaptive lasso exponent (>= 1)"},
        {"route", "spectral or substitution"},
        {"cross_validate", "choose C by cross-validation"},
        {"H", "number of cross-validation splits"},
        {"epsilon", "grid starts at C_min + epsilon"},
        {"grid_points", "number of grid points on [C_min + epsilon, M]"},
        {"grid", "explicit comma-separated grid of C values"},
        {"split", "cross-validation split: contiguous_block or iid"},
        {"seed", "master random seed"},
        {"design", "calibrated, design2, model1, model2 or model3"},
        {"p", "number of assets"},
        {"T", "number of time points"},
        {"reps", "Monte Carlo replications"},
        {"design_K", "number of factors of design2"},
        {"calibration", "calibration parameter file for the calibrated design"},
        {"write_panel", "also write one simulated panel to this CSV"},
        {"estimators", "estimator, as kind or kind:key=value,... (repeatable)"},
        {"window", "estimation window length"},
        {"rebalance_every", "holding period length"},
        {"corr_cap", "largest residual correlation magnitude kept in the fit"},
        {"output", "output directory (default $POET_OUTPUT_DIR or poet_out)"},
    };
    return h;
}

const std::map<std::string, std::string>& command_help() {
    static const std::map<std::string, std::string> h = {
        {"estimate", "Estimate the covariance, its precision and the factor model of a panel"},
        {"select-k", "Choose the number of factors with the information criterion"},
        {"cv", "Choose the threshold constant by cross-validation"},
        {"simulate", "Monte Carlo comparison of estimators on a synthetic design"},
        {"backtest", "Rolling minimum-variance portfolio backtest"},
        {"calibrate", "Fit the calibrated three-factor generator to a panel"},
    };
    return h;
}

std::string flag_name(const std::string& key) {
    std::string s = key;
    std::replace(s.begin(), s.end(), '_', '-');
    return "--" + s;
}

Json text_to_value(const std::string& key, const Json& default_value, const std::string& text) {
    if (default_value.is_string() && key != "K") return text;
    if (default_value.is_null()) {
        Json arr = Json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                arr.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw std::invalid_argument("'" + key + "' expects numbers, got '" + item + "'");
            }
        }
        return arr;
    }
    const Json v = parse_estimator_flag("x:v=" + text).at("v");
    if (default_value.is_number() && !v.is_number() && !(key == "C" && v == "inf")) {
        throw std::invalid_argument("'" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

// One subcommand: the flags mirror the config keys one to one.
struct Subcommand {
    std::string name;
    CLI::App* app = nullptr;
    Json defaults;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
    std::vector<std::string> estimators;
    std::string config_path;
    int threads = 0;
};

void add_options(Subcommand& sc) {
    for (const auto& [key, value] : sc.defaults.items()) {
        const auto it = help_texts().find(key);
        const std::string help = it == help_texts().end() ? key : it->second;
        if (key == "estimators") {
            sc.app->add_option("--estimator", sc.estimators, help);
        } else if (value.is_boolean()) {
            sc.flags[key] = value.get<bool>();
            const std::string f = flag_name(key);
            sc.app->add_flag(f + "{true},!--no-" + f.substr(2), sc.flags[key], help);
        } else {
            std::string desc = help;
            if (!value.is_null() && !(value.is_string() && value.get<std::string>().empty())) {
                desc += " [" + (value.is_string() ? value.get<std::string>() : value.dump()) + "]";
            }
            auto* opt = sc.app->add_option(flag_name(key), sc.text[key], desc);
            if (key == "input") opt->check(CLI::ExistingFile);
        }
    }
    sc.app->add_option("--config", sc.config_path, "JSON config; its keys override flags")
        ->check(CLI::ExistingFile);
    sc.app->add_option("--threads", sc.threads, "worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
}

Json collect(const Subcommand& sc) {
    Json cfg = sc.defaults;
    for (const auto& [key, text] : sc.text) {
        if (sc.app->count(flag_name(key)) > 0) cfg[key] = text_to_value(key, sc.defaults[key], text);
    }
    for (const auto& [key, on] : sc.flags) cfg[key] = on;
    if (!sc.estimators.empty()) {
        Json list = Json::array();
        for (const auto& e : sc.estimators) list.push_back(parse_estimator_flag(e));
        cfg["estimators"] = std::move(list);
    }
    if (!sc.config_path.empty()) cfg = merge_config(cfg, read_json(sc.config_path), sc.name);
    if (cfg.at("output").get<std::string>().empty()) cfg["output"] = default_output_dir();
    return cfg;
}

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ReturnPanel read_panel(const Json& cfg) {
    const std::string path = cfg.at("input").get<std::string>();
    if (path.empty()) throw InputError("no input panel given (--input)");
    if (!fs::exists(path)) throw InputError("input panel not found: " + path);
    return load_csv(path, csv_options_from(cfg));
}

ReturnPanel prepared(const ReturnPanel& panel, const Json& cfg) {
    return cfg.at("demean").get<bool>() ? demean(panel) : panel;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json stat_json(const McStat& s) {
    return {{"mean", number_json(s.mean)}, {"sd", number_json(s.sd)}, {"count", s.count}};
}

Json summary_json(const McResult& r) {
    Json out = Json::object();
    for (const auto& s : r.summary) {
        Json metrics = Json::object();
        for (const auto& name : metric_names()) {
            auto it = s.metrics.find(name);
            if (it != s.metrics.end()) metrics[name] = stat_json(it->second);
        }
        out[s.estimator] = {{"failures", s.failures}, {"metrics", std::move(metrics)}};
    }
    return out;
}

Json params_json(const CalibrationParams& p) {
    auto vec = [](const Eigen::Vector3d& v) {
        return Json::array({number_json(v(0)), number_json(v(1)), number_json(v(2))});
    };
    auto mat = [](const Eigen::Matrix3d& m) {
        Json rows = Json::array();
        for (int i = 0; i < 3; ++i) {
            rows.push_back(Json::array(
                {number_json(m(i, 0)), number_json(m(i, 1)), number_json(m(i, 2))}));
        }
        return rows;
    };
    return {{"mu_B", vec(p.mu_B)},
            {"Sigma_B", mat(p.Sigma_B)},
            {"mu_f", vec(p.mu_f)},
            {"Phi", mat(p.Phi)},
            {"Sigma_eps", mat(p.Sigma_eps)},
            {"gamma_shape", number_json(p.gamma_shape)},
            {"gamma_scale", number_json(p.gamma_scale)},
            {"corr_mean", number_json(p.corr_mean)},
            {"corr_sd", number_json(p.corr_sd)},
            {"corr_cap", number_json(p.corr_cap)}};
}

Json run_estimate(const Json& cfg, const fs::path& dir, std::ostream& out) {
    const ReturnPanel panel = prepared(read_panel(cfg), cfg);
    FactorChoice factors = factor_choice_from(cfg);
    ThresholdSpec spec = threshold_from(cfg);
    const ShrinkageRule rule = rule_from(cfg);
    const std::string route = cfg.at("route").get<std::string>();
    if (route != "spectral" && route != "substitution") {
        throw std::invalid_argument("'route' must be spectral or substitution");
    }

    std::optional<CvResult> cv;
    std::optional<FactorSelection> selection;
    if (cfg.at("cross_validate").get<bool>()) {
        if (!factors.fixed) {
            selection = select_num_factors(
                panel, std::min(factors.max_factors, std::min(panel.p(), panel.T()) - 1),
                factors.variant);
            factors = FactorChoice::exactly(selection->K_hat);
        }
        CvConfig c = cv_from(cfg, seed_of(cfg));
        cv = cross_validate_c(estimate_factors(panel, *factors.fixed).U_hat, rule, c);
        spec.C = cv->C_star;
    }

    PoetEstimate e = route == "spectral" ? poet(panel, factors, spec, rule)
                                         : poet_substitution(panel, factors, spec, rule);
    if (selection) e.selection = selection;
    std::string precision_note;
    try {
        e = precision_woodbury(e);
    } catch (const NumericalError& ex) {
        precision_note = ex.what();
    }

    write_estimate_matrices(e, panel, dir);
    if (e.selection) write_ic_curve_csv(*e.selection, dir / "ic_curve.csv");
    if (cv) write_cv_curve_csv(*cv, dir / "cv_curve.csv");

    Json result = estimate_meta(e);
    result["route"] = route;
    if (!precision_note.empty()) result["precision_error"] = precision_note;
    if (cv) result["cross_validation"] = to_json(*cv);
    out << "K = " << e.K_used << ", C = " << format_double(e.C_used)
        << (e.precision_sigma ? "" : " (precision unavailable)") << '\n';
    return result;
}

Json run_select_k(const Json& cfg, const fs::path& dir, std::ostream& out) {
    const ReturnPanel panel = prepared(read_panel(cfg), cfg);
    const FactorChoice f = factor_choice_from(cfg);
    const Index cap = std::max<Index>(0, std::min(panel.p(), panel.T()) - 1);
    const Index M = std::min(f.max_factors, cap);
    const FactorSelection sel = select_num_factors(panel, M, f.variant);
    write_ic_curve_csv(sel, dir / "ic_curve.csv");
    Json result = to_json(sel);
    result["max_factors_used"] = M;
    out << sel.K_hat << '\n';
    return result;
}

Json run_cv(const Json& cfg, const fs::path& dir, std::ostream& out) {
    const ReturnPanel panel = prepared(read_panel(cfg), cfg);
    const FactorChoice factors = factor_choice_from(cfg);
    const Index K = resolve_num_factors(panel, factors);
    const ShrinkageRule rule = rule_from(cfg);
    const CvConfig c = cv_from(cfg, seed_of(cfg));
    const FactorFit fit = estimate_factors(panel, K);
    const CvResult r = cross_validate_c(fit.U_hat, rule, c);

    ThresholdSpec family;
    family.style = c.style;
    family = family.resolved(panel.p(), panel.T());
    const CminSearch search = c_min_search(residual_moments(fit.U_hat), family, rule);

    write_cv_curve_csv(r, dir / "cv_curve.csv");
    write_eigen_curve_csv(search.curve, dir / "eigen_curve.csv");
    Json result = to_json(r);
    result["K"] = K;
    out << "C* = " << format_double(r.C_star) << " (C_min = " << format_double(r.C_min)
        << ", K = " << K << ")\n";
    return result;
}

Json default_mc_estimators() {
    return Json::array({{{"kind", "poet"}}, {{"kind", "sample"}}});
}

Json default_backtest_estimators() {
    return Json::array({{{"kind", "poet"}, {"cross_validate", true}}, {{"kind", "strict_factor"}}});
}

Json run_simulate(Json& cfg, const fs::path& dir, std::ostream& out) {
    if (cfg.at("estimators").empty()) cfg["estimators"] = default_mc_estimators();
    const Index reps = cfg.at("reps").get<Index>();
    const std::string panel_path = cfg.at("write_panel").get<std::string>();
    if (reps == 0 && panel_path.empty()) {
        throw std::invalid_argument("reps = 0 only makes sense together with write_panel");
    }
    Json probe = cfg;
    if (reps == 0) probe["reps"] = 1;
    const McConfig mc = mc_config_from(probe);

    Json result = Json::object();
    if (!panel_path.empty()) {
        std::optional<SymMatrix> sigma_u;
        if (mc.design == Design::calibrated) {
            sigma_u = calibrate_error_covariance(mc.params, mc.p, mc.seed);
        }
        save_csv(simulate_replication(mc, 0, sigma_u).panel, panel_path);
        result["panel_written"] = panel_path;
    }
    if (reps == 0) {
        out << "wrote " << panel_path << '\n';
        return result;
    }
    const McResult r = run_monte_carlo(mc);
    write_mc_rows_csv(r, dir / "mc_rows.csv");
    write_mc_summary_csv(r, dir / "mc_summary.csv");
    result["summary"] = summary_json(r);
    for (const auto& s : r.summary) {
        auto it = s.metrics.find("sigma_spectral");
        out << s.estimator << ": mean ||Sigma_hat - Sigma|| = "
            << (it == s.metrics.end() ? std::string("n/a") : format_double(it->second.mean))
            << ", failures " << s.failures << '\n';
    }
    return result;
}

Json run_backtest(Json& cfg, const fs::path& dir, std::ostream& out) {
    if (cfg.at("estimators").empty()) cfg["estimators"] = default_backtest_estimators();
    const BacktestConfig b = backtest_config_from(cfg);
    const ReturnPanel panel = read_panel(cfg);
    const BacktestReport r = backtest(panel, b);
    write_backtest_csv(r, dir / "backtest.csv");
    Json comparisons = Json::array();
    for (const auto& c : r.comparisons) {
        comparisons.push_back(to_json(c));
        out << c.estimator << " vs " << c.against << ": win fraction "
            << format_double(c.win_fraction) << " over " << c.periods << " periods\n";
    }
    return {{"periods", r.periods},
            {"failed_periods", r.failed_periods},
            {"comparisons", std::move(comparisons)}};
}

Json run_calibrate(const Json& cfg, const fs::path& dir, std::ostream& out) {
    const ReturnPanel panel = read_panel(cfg);
    const CalibrationParams params = calibrate_from_panel(panel, cfg.at("corr_cap").get<double>());
    params.validate();
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "calibration.txt");
        if (!f) throw std::runtime_error("cannot write " + (dir / "calibration.txt").string());
        write_calibration(params, f);
    }
    Json result = {{"parameters", params_json(params)}};
    const std::string panel_path = cfg.at("write_panel").get<std::string>();
    if (!panel_path.empty()) {
        const Index p = cfg.at("p").get<Index>() > 0 ? cfg.at("p").get<Index>() : panel.p();
        const Index T = cfg.at("T").get<Index>() > 0 ? cfg.at("T").get<Index>() : panel.T();
        save_csv(simulate_calibrated(params, p, T, seed_of(cfg)).panel, panel_path);
        result["panel_written"] = panel_path;
    }
    out << "wrote " << (dir / "calibration.txt").string() << '\n';
    return result;
}

Json error_json(int code, const std::string& type, const std::string& message) {
    return {{"error", {{"code", code}, {"type", type}, {"message", message}}}};
}

}  // namespace

std::string default_output_dir() {
    const char* env = std::getenv("POET_OUTPUT_DIR");
    return env != nullptr && *env != '\0' ? std::string(env) : std::string("poet_out");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Covariance estimation for approximate factor models", "poet"};
    app.set_version_flag("--version", POET_VERSION);
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Subcommand>> subs;
    for (const std::string name : {"estimate", "select-k", "cv", "simulate", "backtest", "calibrate"}) {
        auto sc = std::make_unique<Subcommand>();
        sc->name = name;
        sc->app = app.add_subcommand(name, command_help().at(name));
        sc->defaults = default_config(name);
        add_options(*sc);
        subs.push_back(std::move(sc));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json(kInputError, "usage_error", e.what()).dump() << '\n';
        return kInputError;
    }

    Subcommand* sc = nullptr;
    for (auto& s : subs) {
        if (s->app->parsed()) sc = s.get();
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        kernels::set_threads(sc->threads);
        Json cfg = collect(*sc);
        const fs::path dir = cfg.at("output").get<std::string>();
        Json result;
        if (sc->name == "estimate") result = run_estimate(cfg, dir, out);
        if (sc->name == "select-k") result = run_select_k(cfg, dir, out);
        if (sc->name == "cv") result = run_cv(cfg, dir, out);
        if (sc->name == "simulate") result = run_simulate(cfg, dir, out);
        if (sc->name == "backtest") result = run_backtest(cfg, dir, out);
        if (sc->name == "calibrate") result = run_calibrate(cfg, dir, out);

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Json meta;
        meta["command"] = sc->name;
        meta["version"] = POET_VERSION;
        meta["seed"] = cfg.contains("seed") ? cfg.at("seed") : Json(0);
        meta["config"] = cfg;
        meta["result"] = std::move(result);
        meta["timing"] = {{"wall_seconds", wall}, {"timestamp", utc_timestamp()}};
        write_json(meta, dir / "meta.json");
        return kOk;
    } catch (const NumericalError& e) {
        err << error_json(kNumericError, "numeric_error", e.what()).dump() << '\n';
        return kNumericError;
    } catch (const InputError& e) {
        err << error_json(kInputError, "input_error", e.what()).dump() << '\n';
        return kInputError;
    } catch (const ParseError& e) {
        err << error_json(kInputError, "parse_error", e.what()).dump() << '\n';
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << error_json(kInputError, "invalid_argument", e.what()).dump() << '\n';
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << error_json(kInputError, "config_error", e.what()).dump() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << error_json(kInternalError, "internal_error", e.what()).dump() << '\n';
        return kInternalError;
    }
}

}  // namespace poet::cli
