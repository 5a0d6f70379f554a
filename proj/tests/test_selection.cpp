#include <cmath>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "poet/selection.hpp"
#include "poet/simulate.hpp"

using namespace poet;

namespace {

ThresholdSpec family(double omega_value, ThresholdStyle style = ThresholdStyle::adaptive_theta) {
    ThresholdSpec s;
    s.style = style;
    s.omega = omega_value;
    return s;
}

Matrix columns(const Matrix& u, const std::vector<Index>& idx) {
    Matrix out(u.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = u.col(idx[k]);
    return out;
}

/// Frobenius loss of one split written out with the reference loops.
double split_loss(const Matrix& u, const CvSplit& split, double C) {
    const Matrix train = columns(u, split.train);
    const Matrix valid = columns(u, split.validation);
    const auto s1 = oracle::second_moment(oracle::to_grid(train));
    const auto th = oracle::product_variance(oracle::to_grid(train));
    const auto s2 = oracle::second_moment(oracle::to_grid(valid));
    const double w = omega(u.rows(), train.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        for (std::size_t j = 0; j < s1.size(); ++j) {
            const double t = i == j ? s1[i][j] : oracle::soft(s1[i][j], C * w * std::sqrt(th[i][j]));
            loss += (t - s2[i][j]) * (t - s2[i][j]);
        }
    }
    return loss;
}

}  // namespace

TEST(MinEigenvalueCurve, NegativeAtZeroWhenAssetsExceedObservations) {
    const Matrix u = testing_util::gaussian(40, 20, 51);
    const ResidualMoments m = residual_moments(u);
    const ThresholdSpec f = family(omega(40, 20));
    const double M = diagonalizing_constant(m, f, ShrinkageRule::soft());
    const auto curve = min_eigenvalue_curve(u, ShrinkageRule::soft(), {0.0, M});
    EXPECT_LE(curve[0].lambda_min, 1e-10);
    EXPECT_NEAR(curve[1].lambda_min, m.sigma.diag().minCoeff(), 1e-12);
    EXPECT_GT(curve[1].lambda_min, 0.0);
}

TEST(MinEigenvalueCurve, MatchesPointwiseRecompute) {
    const Matrix u = testing_util::gaussian(15, 30, 52);
    const ResidualMoments m = residual_moments(u);
    const ThresholdSpec f = family(omega(15, 30));
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(0.1 * k);
    const auto curve = min_eigenvalue_curve(m, f, ShrinkageRule::scad(), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_EQ(curve[k].C, grid[k]);
        const auto ev = oracle::jacobi_eigenvalues(
            oracle::to_grid(thresholded_at(m, f, ShrinkageRule::scad(), grid[k]).matrix()));
        EXPECT_NEAR(curve[k].lambda_min, ev.back(), 1e-10);
    }
}

TEST(DiagonalizingConstant, ProducesDiagonalMatrix) {
    const Matrix u = testing_util::gaussian(12, 40, 53);
    const ResidualMoments m = residual_moments(u);
    const ThresholdSpec f = family(omega(12, 40));
    const double M = diagonalizing_constant(m, f, ShrinkageRule::hard());
    EXPECT_TRUE(is_diagonal(thresholded_at(m, f, ShrinkageRule::hard(), M)));
    EXPECT_FALSE(is_diagonal(thresholded_at(m, f, ShrinkageRule::hard(), 0.0)));
}

TEST(CMin, ZeroWhenAlreadyPositiveDefinite) {
    const Matrix u = testing_util::gaussian(5, 500, 54);
    EXPECT_EQ(c_min(u, ShrinkageRule::soft()), 0.0);
}

TEST(CMin, TwoByTwoClosedForm) {
    // Soft thresholding leaves 0.9 - C w on the off-diagonal; the determinant
    // 0.8 - (0.9 - C w)^2 vanishes at C w = 0.9 - sqrt(0.8).
    ResidualMoments m;
    m.sigma = SymMatrix((Matrix(2, 2) << 1.0, 0.9, 0.9, 0.8).finished());
    m.theta = Matrix::Ones(2, 2);
    const double w = 0.1;
    const double expected = (0.9 - std::sqrt(0.8)) / w;
    EXPECT_NEAR(c_min(m, family(w), ShrinkageRule::soft()), expected, 1e-3);
}

TEST(CMin, PostConditionOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix u = testing_util::factor_panel(30, 20 + static_cast<Index>(seed), 0, 300 + seed).Y;
        const ResidualMoments m = residual_moments(u);
        const ThresholdSpec f = family(omega(u.rows(), u.cols()));
        const CminSearch s = c_min_search(m, f, ShrinkageRule::soft());
        EXPECT_GT(min_eigenvalue(thresholded_at(m, f, ShrinkageRule::soft(), s.C_min + 0.05)), 0.0);
        EXPECT_LE(s.C_min, s.M);
        for (const auto& pt : s.curve) {
            if (pt.C > s.C_min) EXPECT_GT(pt.lambda_min, 0.0);
        }
    }
}

TEST(CMin, NestedAssetSubsetsSatisfyPostCondition) {
    const SimulatedPanel s = simulate_model2(40, 30, 55);
    const Matrix u = demean(s.panel).Y;
    const Matrix sub = u.topRows(25);
    for (const Matrix* x : {&u, &sub}) {
        const ResidualMoments m = residual_moments(*x);
        const ThresholdSpec f = family(omega(x->rows(), x->cols()));
        const double c = c_min(m, f, ShrinkageRule::soft());
        EXPECT_TRUE(std::isfinite(c));
        EXPECT_GT(min_eigenvalue(thresholded_at(m, f, ShrinkageRule::soft(), c + 0.05)), 0.0);
    }
}

TEST(CMin, RejectsZeroVariance) {
    Matrix u = testing_util::gaussian(3, 10, 56);
    u.row(1).setZero();
    EXPECT_THROW(c_min(u, ShrinkageRule::soft()), std::invalid_argument);
}

TEST(CvSplits, SizesAndDeterminism) {
    EXPECT_EQ(cv_train_size(300), static_cast<Index>(std::llround(300 * (1 - 1 / std::log(300.0)))));
    for (Index T : {4, 5, 10, 100, 1000}) {
        const Index t1 = cv_train_size(T);
        EXPECT_GE(t1, 1);
        EXPECT_LT(t1, T);
    }
    for (SplitScheme scheme : {SplitScheme::contiguous_block, SplitScheme::iid}) {
        CvConfig cfg;
        cfg.split = scheme;
        cfg.seed = 9;
        const auto a = make_cv_splits(100, cfg);
        const auto b = make_cv_splits(100, cfg);
        ASSERT_EQ(a.size(), 10u);
        for (std::size_t h = 0; h < a.size(); ++h) {
            EXPECT_EQ(a[h].train, b[h].train);
            EXPECT_EQ(a[h].validation, b[h].validation);
            EXPECT_EQ(static_cast<Index>(a[h].train.size()), cv_train_size(100));
            std::vector<int> seen(100, 0);
            for (Index t : a[h].train) ++seen[static_cast<std::size_t>(t)];
            for (Index t : a[h].validation) ++seen[static_cast<std::size_t>(t)];
            for (int c : seen) EXPECT_EQ(c, 1);
        }
    }
}

TEST(CvConfig, Validation) {
    CvConfig cfg;
    cfg.grid = std::vector<double>{1.0, 0.5};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.grid = std::vector<double>{};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.grid.reset();
    cfg.H = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(CrossValidate, SingleSplitTwoPointGrid) {
    const Matrix u = demean(simulate_model2(15, 80, 57).panel).Y;
    CvConfig cfg;
    cfg.H = 1;
    cfg.seed = 3;
    cfg.grid = std::vector<double>{1.0, 2.0};
    const CvResult r = cross_validate_c(u, ShrinkageRule::soft(), cfg);
    const CvSplit split = make_cv_splits(80, cfg)[0];
    const double l1 = split_loss(u, split, 1.0);
    const double l2 = split_loss(u, split, 2.0);
    ASSERT_EQ(r.curve.size(), 2u);
    EXPECT_NEAR(r.curve[0].score, l1, 1e-10 * (1 + l1));
    EXPECT_NEAR(r.curve[1].score, l2, 1e-10 * (1 + l2));
    EXPECT_EQ(r.C_star, l1 <= l2 ? 1.0 : 2.0);
}

TEST(CrossValidate, ReproducibleAndPositiveDefinite) {
    const Matrix u = testing_util::gaussian(30, 60, 58);
    CvConfig cfg;
    cfg.seed = 4;
    const CvResult a = cross_validate_c(u, ShrinkageRule::soft(), cfg);
    const CvResult b = cross_validate_c(u, ShrinkageRule::soft(), cfg);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t k = 0; k < a.curve.size(); ++k) EXPECT_EQ(a.curve[k].score, b.curve[k].score);
    EXPECT_EQ(a.C_star, b.C_star);
    EXPECT_GE(a.C_star, a.C_min + cfg.epsilon - 1e-12);
    for (std::size_t k = 1; k < a.curve.size(); ++k) EXPECT_GT(a.curve[k].C, a.curve[k - 1].C);
    const ResidualMoments m = residual_moments(u);
    EXPECT_GT(min_eigenvalue(thresholded_at(m, family(omega(30, 60)), ShrinkageRule::soft(), a.C_star)), 0.0);
}

TEST(CrossValidate, GridBelowCminRejected) {
    const Matrix u = testing_util::gaussian(40, 20, 59);
    CvConfig cfg;
    cfg.grid = std::vector<double>{0.0};
    EXPECT_THROW(cross_validate_c(u, ShrinkageRule::soft(), cfg), std::invalid_argument);
}

TEST(CrossValidate, DiagonalTruthPrefersHeavyThresholding) {
    int upper = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix u = demean(ReturnPanel::from_matrix(testing_util::gaussian(30, 400, 600 + seed))).Y;
        CvConfig cfg;
        cfg.seed = seed;
        const CvResult r = cross_validate_c(u, ShrinkageRule::soft(), cfg);
        const double mid = 0.5 * (r.curve.front().C + r.curve.back().C);
        upper += r.C_star >= mid ? 1 : 0;
    }
    EXPECT_GE(upper, 16);
}

TEST(CrossValidate, DenseTruthKeepsCorrelations) {
    int below = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix u = demean(simulate_model3(50, 400, 700 + seed).panel).Y;
        CvConfig cfg;
        cfg.seed = seed;
        const CvResult r = cross_validate_c(u, ShrinkageRule::soft(), cfg);
        below += r.C_star < r.M ? 1 : 0;
    }
    EXPECT_GE(below, 16);
}
