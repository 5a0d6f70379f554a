#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace poet::cli {

namespace {

Json panel_keys() {
    return {{"input", ""}, {"orientation", "assets_as_columns"}, {"label_column", "detect"}};
}

Json factor_keys() { return {{"K", "auto"}, {"max_factors", kDefaultMaxFactors}, {"ic", "ic1"}}; }

Json threshold_keys(const char* rule) {
    return {{"C", 0.5},       {"style", "adaptive_theta"}, {"rule", rule},
            {"scad_a", 3.7},  {"al_eta", 1.0}};
}

Json cv_keys() {
    return {{"H", 10},
            {"epsilon", 0.05},
            {"grid_points", 50},
            {"grid", nullptr},
            {"split", "contiguous_block"}};
}

void absorb(Json& into, const Json& from) {
    for (const auto& [k, v] : from.items()) into[k] = v;
}

std::string kind_of(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    throw std::invalid_argument("expected a string, got " + v.dump());
}

Index index_of(const Json& v, const char* key) {
    if (v.is_number_integer()) return v.get<Index>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d)) return static_cast<Index>(d);
    }
    throw std::invalid_argument(std::string("'") + key + "' must be an integer, got " + v.dump());
}

Json value_of(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    if (text == "inf") return "inf";
    long long i = 0;
    auto [pi, ei] = std::from_chars(text.data(), text.data() + text.size(), i);
    if (ei == std::errc() && pi == text.data() + text.size()) return i;
    double d = 0.0;
    auto [pd, ed] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ed == std::errc() && pd == text.data() + text.size()) return d;
    return text;
}

// Per-estimator keys; anything unset falls back to the command-level value.
const std::vector<std::string>& estimator_keys() {
    static const std::vector<std::string> keys = {
        "id",     "kind",   "K",           "max_factors", "ic", "C",     "style", "rule",
        "scad_a", "al_eta", "cross_validate", "H",        "epsilon", "grid_points", "grid",
        "split"};
    return keys;
}

Json estimator_defaults(const char* rule) {
    Json d = factor_keys();
    absorb(d, threshold_keys(rule));
    absorb(d, cv_keys());
    d["cross_validate"] = false;
    return d;
}

Json resolve_estimator(const Json& obj, const char* rule, Index index) {
    if (!obj.is_object()) throw std::invalid_argument("estimator entries must be objects");
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (const auto& key : estimator_keys()) known = known || key == k;
        if (!known) throw std::invalid_argument("unknown estimator key '" + k + "'");
    }
    Json e = estimator_defaults(rule);
    absorb(e, obj);
    if (!e.contains("kind")) throw std::invalid_argument("estimator entry lacks 'kind'");
    if (!e.contains("id")) e["id"] = kind_of(e["kind"]) + "_" + std::to_string(index);
    return e;
}

// Missing ids default to the kind, suffixed with the position when the kind repeats.
Json with_ids(const Json& list) {
    if (!list.is_array()) throw std::invalid_argument("'estimators' must be an array");
    Json out = list;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i].is_object() || out[i].contains("id") || !out[i].contains("kind")) continue;
        std::size_t same = 0;
        for (const auto& other : list) {
            same += other.is_object() && other.value("kind", Json()) == out[i]["kind"];
        }
        out[i]["id"] = kind_of(out[i]["kind"]) + (same > 1 ? "_" + std::to_string(i) : "");
    }
    return out;
}

}  // namespace

Json default_config(const std::string& command) {
    Json c;
    if (command == "estimate") {
        c = panel_keys();
        c["demean"] = true;
        absorb(c, factor_keys());
        absorb(c, threshold_keys("soft"));
        c["route"] = "spectral";
        c["cross_validate"] = false;
        absorb(c, cv_keys());
        c["seed"] = 0;
    } else if (command == "select-k") {
        c = panel_keys();
        c["demean"] = true;
        c["max_factors"] = kDefaultMaxFactors;
        c["ic"] = "ic1";
    } else if (command == "cv") {
        c = panel_keys();
        c["demean"] = true;
        absorb(c, factor_keys());
        Json t = threshold_keys("soft");
        t.erase("C");
        absorb(c, t);
        absorb(c, cv_keys());
        c["seed"] = 0;
    } else if (command == "simulate") {
        c = {{"design", "calibrated"}, {"p", 100},          {"T", 300},
             {"reps", 50},             {"seed", 0},         {"design_K", 3},
             {"calibration", ""},      {"write_panel", ""}, {"estimators", Json::array()}};
    } else if (command == "backtest") {
        c = panel_keys();
        c["window"] = 252;
        c["rebalance_every"] = 21;
        c["seed"] = 0;
        c["estimators"] = Json::array();
    } else if (command == "calibrate") {
        c = panel_keys();
        c["corr_cap"] = 0.95;
        c["write_panel"] = "";
        c["p"] = 0;
        c["T"] = 0;
        c["seed"] = 0;
    } else {
        throw std::invalid_argument("unknown command '" + command + "'");
    }
    c["output"] = "";
    return c;
}

Json merge_config(const Json& base, const Json& overrides, const std::string& command) {
    if (!overrides.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    const Json known = default_config(command);
    Json out = base;
    for (const auto& [k, v] : overrides.items()) {
        if (!known.contains(k)) {
            throw std::invalid_argument("config key '" + k + "' is not used by '" + command + "'");
        }
        out[k] = v;
    }
    return out;
}

std::uint64_t seed_of(const Json& cfg) {
    const Json& s = cfg.at("seed");
    if (s.is_number_unsigned()) return s.get<std::uint64_t>();
    if (s.is_number_integer() && s.get<long long>() >= 0) return s.get<std::uint64_t>();
    throw std::invalid_argument("'seed' must be a non-negative integer");
}

FactorChoice factor_choice_from(const Json& cfg) {
    FactorChoice f;
    f.max_factors = index_of(cfg.at("max_factors"), "max_factors");
    const std::string ic = kind_of(cfg.at("ic"));
    if (ic == "ic1") {
        f.variant = IcVariant::ic1;
    } else if (ic == "ic2") {
        f.variant = IcVariant::ic2;
    } else {
        throw std::invalid_argument("'ic' must be ic1 or ic2");
    }
    if (f.max_factors < 0) throw std::invalid_argument("'max_factors' must be >= 0");
    if (cfg.contains("K")) {
        const Json& k = cfg.at("K");
        if (!(k.is_string() && k.get<std::string>() == "auto")) {
            f.fixed = index_of(k, "K");
            if (*f.fixed < 0) throw std::invalid_argument("'K' must be >= 0");
        }
    }
    return f;
}

ThresholdSpec threshold_from(const Json& cfg) {
    ThresholdSpec s;
    if (cfg.contains("C")) s.C = number_from_json(cfg.at("C"));
    s.style = parse_threshold_style(kind_of(cfg.at("style")));
    s.validate();
    return s;
}

ShrinkageRule rule_from(const Json& cfg) {
    ShrinkageRule r = ShrinkageRule::parse(kind_of(cfg.at("rule")));
    r.scad_a = cfg.at("scad_a").get<double>();
    r.al_eta = cfg.at("al_eta").get<double>();
    r.validate();
    return r;
}

CvConfig cv_from(const Json& cfg, std::uint64_t seed) {
    CvConfig cv;
    cv.H = index_of(cfg.at("H"), "H");
    cv.epsilon = cfg.at("epsilon").get<double>();
    cv.grid_points = index_of(cfg.at("grid_points"), "grid_points");
    if (!cfg.at("grid").is_null()) cv.grid = cfg.at("grid").get<std::vector<double>>();
    const std::string split = kind_of(cfg.at("split"));
    if (split == "contiguous_block") {
        cv.split = SplitScheme::contiguous_block;
    } else if (split == "iid") {
        cv.split = SplitScheme::iid;
    } else {
        throw std::invalid_argument("'split' must be contiguous_block or iid");
    }
    cv.seed = seed;
    if (cfg.contains("style")) cv.style = parse_threshold_style(kind_of(cfg.at("style")));
    cv.validate();
    return cv;
}

CsvOptions csv_options_from(const Json& cfg) {
    CsvOptions o;
    const std::string orient = kind_of(cfg.at("orientation"));
    if (orient == "assets_as_columns" || orient == "columns") {
        o.orientation = Orientation::assets_as_columns;
    } else if (orient == "assets_as_rows" || orient == "rows") {
        o.orientation = Orientation::assets_as_rows;
    } else {
        throw std::invalid_argument("'orientation' must be assets_as_columns or assets_as_rows");
    }
    const std::string label = kind_of(cfg.at("label_column"));
    if (label == "detect") {
        o.label_column = LabelColumn::detect;
    } else if (label == "present") {
        o.label_column = LabelColumn::present;
    } else if (label == "absent") {
        o.label_column = LabelColumn::absent;
    } else {
        throw std::invalid_argument("'label_column' must be detect, present or absent");
    }
    return o;
}

Json parse_estimator_flag(const std::string& text) {
    Json obj;
    const auto colon = text.find(':');
    obj["kind"] = text.substr(0, colon);
    if (colon == std::string::npos) return obj;
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string item =
            rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw std::invalid_argument("estimator option '" + item + "' is not key=value");
            }
            const std::string key = item.substr(0, eq);
            // Keep ids and kinds as strings even when they look numeric.
            obj[key] = key == "id" ? Json(item.substr(eq + 1)) : value_of(item.substr(eq + 1));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return obj;
}

McEstimator mc_estimator_from(const Json& obj, Index index) {
    const Json e = resolve_estimator(obj, "hard", index);
    McEstimator m;
    m.id = kind_of(e.at("id"));
    m.kind = parse_mc_estimator_kind(kind_of(e.at("kind")));
    m.factors = factor_choice_from(e);
    m.spec = threshold_from(e);
    m.rule = rule_from(e);
    m.cross_validate = e.at("cross_validate").get<bool>();
    m.cv = cv_from(e, 0);
    return m;
}

EstimatorConfig backtest_estimator_from(const Json& obj, Index index) {
    const Json e = resolve_estimator(obj, "soft", index);
    EstimatorConfig c;
    c.id = kind_of(e.at("id"));
    c.kind = parse_estimator_kind(kind_of(e.at("kind")));
    c.factors = factor_choice_from(e);
    c.spec = threshold_from(e);
    c.rule = rule_from(e);
    c.cross_validate = e.at("cross_validate").get<bool>();
    c.cv = cv_from(e, 0);
    return c;
}

McConfig mc_config_from(const Json& cfg) {
    McConfig m;
    m.design = parse_design(kind_of(cfg.at("design")));
    m.p = index_of(cfg.at("p"), "p");
    m.T = index_of(cfg.at("T"), "T");
    m.reps = index_of(cfg.at("reps"), "reps");
    m.seed = seed_of(cfg);
    m.design_K = index_of(cfg.at("design_K"), "design_K");
    const std::string calibration = kind_of(cfg.at("calibration"));
    if (!calibration.empty()) m.params = read_calibration(calibration);
    const Json list = with_ids(cfg.at("estimators"));
    for (std::size_t i = 0; i < list.size(); ++i) {
        m.estimators.push_back(mc_estimator_from(list[i], static_cast<Index>(i)));
    }
    for (std::size_t i = 0; i < m.estimators.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (m.estimators[i].id == m.estimators[j].id) {
                throw std::invalid_argument("duplicate estimator id '" + m.estimators[i].id + "'");
            }
        }
    }
    m.validate();
    return m;
}

BacktestConfig backtest_config_from(const Json& cfg) {
    BacktestConfig b;
    b.window = index_of(cfg.at("window"), "window");
    b.rebalance_every = index_of(cfg.at("rebalance_every"), "rebalance_every");
    b.seed = seed_of(cfg);
    const Json list = with_ids(cfg.at("estimators"));
    for (std::size_t i = 0; i < list.size(); ++i) {
        b.estimators.push_back(backtest_estimator_from(list[i], static_cast<Index>(i)));
    }
    for (std::size_t i = 0; i < b.estimators.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (b.estimators[i].id == b.estimators[j].id) {
                throw std::invalid_argument("duplicate estimator id '" + b.estimators[i].id + "'");
            }
        }
    }
    return b;
}

}  // namespace poet::cli
