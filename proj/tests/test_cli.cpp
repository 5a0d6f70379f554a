#include <algorithm>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "helpers.hpp"
#include "poet/serialize.hpp"

using namespace poet;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = POET_FIXTURE_DIR;

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "poet_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path tiny_panel(const fs::path& dir) {
    const fs::path f = dir / "tiny.csv";
    save_csv(ReturnPanel::from_matrix(testing_util::gaussian(3, 10, 81)), f);
    return f;
}

Json without_timing(Json meta) {
    meta.erase("timing");
    return meta;
}

}  // namespace

TEST(CliEstimate, ZeroThresholdGivesSampleCovariance) {
    const fs::path dir = fresh_dir("estimate_tiny");
    const fs::path input = tiny_panel(dir);
    const Outcome o = run_cli({"estimate", "--input", input.string(), "--K", "1", "--C", "0",
                               "--output", (dir / "out").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    const Matrix s = read_matrix_csv(dir / "out" / "Sigma_hat.csv");
    const SymMatrix sam = sample_covariance(demean(load_csv(input)));
    EXPECT_TRUE((s.array() == sam.matrix().array()).all());
    const Json meta = read_json(dir / "out" / "meta.json");
    EXPECT_EQ(meta.at("command"), "estimate");
    EXPECT_TRUE(meta.contains("version"));
    EXPECT_TRUE(meta.contains("seed"));
    EXPECT_TRUE(meta.at("timing").contains("wall_seconds"));
    EXPECT_EQ(meta.at("config").at("K"), 1);
}

TEST(CliEstimate, MissingFileNamesPath) {
    const std::string path = (fresh_dir("missing") / "nope.csv").string();
    const Outcome o = run_cli({"estimate", "--input", path});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("nope.csv"), std::string::npos) << o.err;
    const Json e = Json::parse(o.err);
    EXPECT_EQ(e.at("error").at("code"), 2);
}

TEST(CliEstimate, RerunIsIdenticalApartFromTiming) {
    const fs::path dir = fresh_dir("rerun");
    const std::vector<std::string> base = {"estimate", "--input",
                                           (kFixtures / "design2_p60_T120.csv").string(),
                                           "--cross-validate", "--seed", "5"};
    auto with_out = [&](const std::string& sub) {
        std::vector<std::string> a = base;
        a.push_back("--output");
        a.push_back((dir / sub).string());
        return a;
    };
    ASSERT_EQ(run_cli(with_out("a")).code, 0);
    ASSERT_EQ(run_cli(with_out("b")).code, 0);
    Json a = without_timing(read_json(dir / "a" / "meta.json"));
    Json b = without_timing(read_json(dir / "b" / "meta.json"));
    a["config"].erase("output");
    b["config"].erase("output");
    EXPECT_EQ(a, b);
    for (const char* f : {"Sigma_hat.csv", "precision.csv", "cv_curve.csv"}) {
        std::ifstream fa(dir / "a" / f), fb(dir / "b" / f);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        EXPECT_EQ(sa.str(), sb.str()) << f;
    }
}

TEST(CliEstimate, ConfigFileOverridesFlags) {
    const fs::path dir = fresh_dir("config");
    const fs::path input = tiny_panel(dir);
    write_json(Json{{"C", 0.0}, {"K", 1}}, dir / "cfg.json");
    const Outcome o = run_cli({"estimate", "--input", input.string(), "--C", "5", "--config",
                               (dir / "cfg.json").string(), "--output", (dir / "out").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(number_from_json(read_json(dir / "out" / "meta.json").at("result").at("C")), 0.0);

    write_json(Json{{"bogus", 1}}, dir / "bad.json");
    EXPECT_EQ(run_cli({"estimate", "--input", input.string(), "--config", (dir / "bad.json").string(),
                       "--output", (dir / "out2").string()})
                  .code,
              2);
}

TEST(CliSelectK, Fixtures) {
    const fs::path dir = fresh_dir("selectk");
    Outcome o = run_cli({"select-k", "--input", (kFixtures / "design2_p60_T120.csv").string(), "--output",
                         (dir / "a").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.out, "3\n");
    EXPECT_TRUE(fs::exists(dir / "a" / "ic_curve.csv"));

    o = run_cli({"select-k", "--input", (kFixtures / "noise_p40_T100.csv").string(), "--output",
                 (dir / "b").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.out, "0\n");

    o = run_cli({"select-k", "--input", (kFixtures / "design2_p60_T120.csv").string(), "--max-factors", "0",
                 "--output", (dir / "c").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.out, "0\n");
}

TEST(CliCv, RecordsCStarAndRejectsBadGrid) {
    const fs::path dir = fresh_dir("cv");
    const std::string input = (kFixtures / "design2_p60_T120.csv").string();
    Outcome o = run_cli({"cv", "--input", input, "--output", (dir / "a").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json meta = read_json(dir / "a" / "meta.json");
    EXPECT_TRUE(meta.at("result").contains("C_star"));
    EXPECT_TRUE(fs::exists(dir / "a" / "cv_curve.csv"));
    EXPECT_TRUE(fs::exists(dir / "a" / "eigen_curve.csv"));

    write_json(Json{{"grid", Json::array({2.0, 1.0})}}, dir / "bad.json");
    o = run_cli({"cv", "--input", input, "--config", (dir / "bad.json").string(), "--output",
                 (dir / "b").string()});
    EXPECT_EQ(o.code, 2) << o.err;
}

TEST(CliSimulate, SummaryMatchesRows) {
    const fs::path dir = fresh_dir("simulate");
    const Outcome o = run_cli({"simulate", "--design", "design2", "--p", "20", "--T", "40", "--reps", "3",
                               "--seed", "4", "--output", dir.string()});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json meta = read_json(dir / "meta.json");
    std::ifstream in(dir / "mc_rows.csv");
    std::string header;
    std::getline(in, header);
    std::vector<std::string> cols;
    {
        std::stringstream hs(header);
        std::string c;
        while (std::getline(hs, c, ',')) cols.push_back(c);
    }
    const auto col_of = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    };
    const std::size_t est_col = col_of("estimator");
    const std::size_t metric_col = col_of("sigma_spectral");
    ASSERT_LT(metric_col, cols.size());
    std::map<std::string, std::pair<double, int>> sums;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        auto& [sum, n] = sums[cells[est_col]];
        sum += std::stod(cells[metric_col]);
        ++n;
    }
    ASSERT_EQ(sums.size(), 2u);
    const Json& summary = meta.at("result").at("summary");
    for (const auto& [est, acc] : sums) {
        EXPECT_EQ(acc.second, 3);
        const double mean = number_from_json(summary.at(est).at("metrics").at("sigma_spectral").at("mean"));
        EXPECT_NEAR(mean, acc.first / 3.0, 1e-12 * (1 + mean));
    }
}

TEST(CliBacktest, TiesAndShortPanel) {
    const fs::path dir = fresh_dir("backtest");
    const std::string input = (kFixtures / "design2_p60_T120.csv").string();
    Outcome o = run_cli({"backtest", "--input", input, "--window", "60", "--rebalance-every", "20",
                         "--estimator", "poet:C=1", "--estimator", "poet:C=1", "--output", (dir / "a").string()});
    ASSERT_EQ(o.code, 0) << o.err;
    const Json meta = read_json(dir / "a" / "meta.json");
    EXPECT_EQ(number_from_json(meta.at("result").at("comparisons").at(0).at("win_fraction")), 0.5);

    o = run_cli({"backtest", "--input", input, "--window", "252", "--output", (dir / "b").string()});
    EXPECT_EQ(o.code, 2);
}

TEST(CliCalibrate, WritesParameters) {
    const fs::path dir = fresh_dir("calibrate");
    const Outcome o = run_cli({"calibrate", "--input", (kFixtures / "design2_p60_T120.csv").string(),
                               "--write-panel", (dir / "sim.csv").string(), "--p", "10", "--T", "20",
                               "--output", dir.string()});
    ASSERT_EQ(o.code, 0) << o.err;
    std::ifstream in(dir / "calibration.txt");
    EXPECT_NO_THROW(parse_calibration(in));
    const ReturnPanel sim = load_csv(dir / "sim.csv");
    EXPECT_EQ(sim.p(), 10);
    EXPECT_EQ(sim.T(), 20);
}

TEST(CliUsage, UnknownCommandAndVersion) {
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({}).code, 2);
    const Outcome v = run_cli({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find('.'), std::string::npos);
}
