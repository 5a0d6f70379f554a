#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "poet/estimator.hpp"
#include "poet/selection.hpp"

using namespace poet;

namespace {

ThresholdSpec spec_of(double C, ThresholdStyle style = ThresholdStyle::adaptive_theta) {
    ThresholdSpec s;
    s.C = C;
    s.style = style;
    return s;
}

TrueModel identity_truth(Index p) {
    TrueModel t;
    t.B = Matrix(p, 0);
    t.factor_cov = SymMatrix(Matrix(0, 0));
    t.Sigma_u = SymMatrix::identity(p);
    t.Sigma = SymMatrix::identity(p);
    t.F = Matrix(10, 0);
    return t;
}

}  // namespace

TEST(PrincipalComplement, Examples) {
    const SymMatrix s = testing_util::random_spd(6, 31);
    const PrincipalComplement k0 = principal_complement(s, 0);
    EXPECT_TRUE((k0.low_rank.matrix().array() == 0.0).all());
    EXPECT_TRUE((k0.R_K.matrix().array() == s.matrix().array()).all());
    const PrincipalComplement kp = principal_complement(s, 6);
    EXPECT_LE(norm_max(kp.R_K.matrix()), 1e-12);

    const SymMatrix d = SymMatrix::diagonal((Vector(3) << 5.0, 1.0, 1.0).finished());
    const PrincipalComplement k1 = principal_complement(d, 1);
    const Matrix expected = (Vector(3) << 5.0, 0.0, 0.0).finished().asDiagonal();
    EXPECT_LE(norm_max(Matrix(k1.low_rank.matrix() - expected)), 1e-14);
    EXPECT_THROW(principal_complement(s, 7), std::invalid_argument);
}

TEST(PrincipalComplement, ReconstructsAndHasBoundedRank) {
    const SymMatrix s = testing_util::random_spd(10, 32);
    for (Index K = 0; K <= 10; ++K) {
        const PrincipalComplement pc = principal_complement(s, K);
        EXPECT_LE(norm_max(Matrix(pc.low_rank.matrix() + pc.R_K.matrix() - s.matrix())), 1e-10);
        const Vector ev = eigh(pc.low_rank).eigenvalues;
        for (Index j = K; j < 10; ++j) EXPECT_LE(std::abs(ev(j)), 1e-10);
    }
}

TEST(Poet, ZeroThresholdIsSampleCovariance) {
    const ReturnPanel panel = testing_util::factor_panel(15, 40, 2, 33);
    const SymMatrix sam = sample_covariance(panel);
    for (Index K = 0; K <= 4; ++K) {
        const PoetEstimate e = poet::poet(panel, FactorChoice::exactly(K), spec_of(0.0), ShrinkageRule::soft());
        EXPECT_TRUE((e.Sigma_hat.matrix().array() == sam.matrix().array()).all()) << "K=" << K;
    }
}

TEST(Poet, LargeThresholdIsStrictFactor) {
    const ReturnPanel panel = testing_util::factor_panel(15, 40, 2, 34);
    const PoetEstimate e = poet::poet(panel, FactorChoice::exactly(2), spec_of(1e6), ShrinkageRule::hard());
    EXPECT_TRUE(is_diagonal(e.Sigma_u_hat));
    const PrincipalComplement pc = principal_complement(sample_covariance(panel), 2);
    const Matrix expected = pc.low_rank.matrix() + Matrix(pc.R_K.diag().asDiagonal());
    EXPECT_LE(norm_max(Matrix(e.Sigma_hat.matrix() - expected)), 1e-12);
    const PoetEstimate sfm = strict_factor_estimate(panel, FactorChoice::exactly(2));
    EXPECT_LE(norm_max(Matrix(sfm.Sigma_hat.matrix() - e.Sigma_hat.matrix())), 1e-12);
}

TEST(Poet, NoFactorsIsDirectThresholding) {
    const ReturnPanel panel = testing_util::factor_panel(12, 30, 1, 35);
    const SymMatrix sam = sample_covariance(panel);
    ThresholdSpec s = spec_of(0.8, ThresholdStyle::constant);
    s.omega = 0.25;
    const PoetEstimate e = poet::poet(panel, FactorChoice::exactly(0), s, ShrinkageRule::hard());
    for (Index i = 0; i < 12; ++i) {
        for (Index j = 0; j < 12; ++j) {
            const double expected = i == j ? sam(i, j) : oracle::hard(sam(i, j), 0.2);
            EXPECT_EQ(e.Sigma_hat(i, j), expected);
        }
    }
}

TEST(Poet, SpectralAndSubstitutionRoutesAgree) {
    for (auto [p, T] : {std::pair<Index, Index>{10, 50}, {50, 200}, {40, 30}}) {
        const ReturnPanel panel = testing_util::factor_panel(p, T, 2, static_cast<std::uint64_t>(p + T));
        for (Index K = 0; K <= 5; ++K) {
            for (auto rule : {ShrinkageRule::hard(), ShrinkageRule::soft(), ShrinkageRule::scad()}) {
                const PoetEstimate a = poet::poet(panel, FactorChoice::exactly(K), spec_of(0.7), rule);
                const PoetEstimate b = poet_substitution(panel, FactorChoice::exactly(K), spec_of(0.7), rule);
                EXPECT_LE(norm_max(Matrix(a.Sigma_hat.matrix() - b.Sigma_hat.matrix())), 1e-8);
                EXPECT_LE(norm_max(Matrix(a.Sigma_u_hat.matrix() - b.Sigma_u_hat.matrix())), 1e-8);
            }
        }
    }
}

TEST(Poet, DecompositionIdentity) {
    const ReturnPanel panel = testing_util::factor_panel(20, 60, 3, 36);
    const PoetEstimate e = poet::poet(panel, FactorChoice::exactly(3), spec_of(0.5), ShrinkageRule::soft());
    const PrincipalComplement pc = principal_complement(sample_covariance(panel), 3);
    EXPECT_LE(norm_max(Matrix(e.low_rank.matrix() + pc.R_K.matrix() - sample_covariance(panel).matrix())),
              1e-10);
    EXPECT_LE(norm_max(Matrix(e.Sigma_hat.matrix() - e.low_rank.matrix() - e.Sigma_u_hat.matrix())), 1e-10);
    EXPECT_TRUE((e.Sigma_hat.matrix().array() == e.Sigma_hat.matrix().transpose().array()).all());
}

TEST(Poet, NoiselessLowRank) {
    const Matrix b = testing_util::gaussian(8, 2, 37);
    const Matrix f = testing_util::gaussian(2, 40, 38);
    const ReturnPanel panel = demean(ReturnPanel::from_matrix(b * f));
    const PoetEstimate e = poet_substitution(panel, FactorChoice::exactly(2), spec_of(0.5), ShrinkageRule::soft());
    EXPECT_LE(e.Sigma_u_hat.diag().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(norm_max(Matrix(e.Sigma_hat.matrix() - sample_covariance(panel).matrix())), 1e-10);
}

TEST(Poet, AutomaticKRecordsSelection) {
    const ReturnPanel panel = testing_util::factor_panel(30, 80, 2, 39);
    const PoetEstimate e = poet::poet(panel, FactorChoice::automatic(), spec_of(0.5), ShrinkageRule::soft());
    ASSERT_TRUE(e.selection.has_value());
    EXPECT_EQ(e.K_used, e.selection->K_hat);
    EXPECT_EQ(resolve_num_factors(panel, FactorChoice::automatic()), e.K_used);
    // M is capped at min(p, T) - 1 rather than rejected.
    const ReturnPanel small = testing_util::factor_panel(4, 30, 1, 40);
    EXPECT_LE(resolve_num_factors(small, FactorChoice::automatic(8)), 3);
}

TEST(Woodbury, NoFactorsInvertsThresholdedMatrix) {
    const ReturnPanel panel = testing_util::factor_panel(10, 80, 0, 41);
    const PoetEstimate e =
        precision_woodbury(poet::poet(panel, FactorChoice::exactly(0), spec_of(0.5), ShrinkageRule::soft()));
    ASSERT_TRUE(e.precision_sigma.has_value());
    const auto inv = oracle::inverse(oracle::to_grid(e.Sigma_u_hat.matrix()));
    for (Index i = 0; i < 10; ++i) {
        for (Index j = 0; j < 10; ++j) {
            EXPECT_NEAR((*e.precision_sigma)(i, j), inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                        1e-10);
        }
    }
}

TEST(Woodbury, MatchesDirectInverse) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ReturnPanel panel = testing_util::factor_panel(60, 120, 3, 200 + seed);
        const PoetEstimate e =
            precision_woodbury(poet::poet(panel, FactorChoice::exactly(3), spec_of(0.5), ShrinkageRule::soft()));
        const Matrix direct = e.Sigma_hat.matrix().lu().inverse();
        const double rel = norm_spectral(Matrix(e.precision_sigma->matrix() - direct)) / norm_spectral(direct);
        EXPECT_LE(rel, 1e-6);
        ASSERT_TRUE(e.woodbury_residual.has_value());
        EXPECT_LE(*e.woodbury_residual, 1e-6);
    }
}

TEST(Woodbury, ClosedForm) {
    const Matrix q = Eigen::HouseholderQR<Matrix>(testing_util::gaussian(6, 2, 42)).householderQ() *
                     Matrix::Identity(6, 2);
    PoetEstimate e;
    e.Sigma_u_hat = SymMatrix::identity(6);
    e.factor_fit.K = 2;
    e.factor_fit.Lambda_hat = q;
    e.Sigma_hat = SymMatrix(Matrix(q * q.transpose() + Matrix::Identity(6, 6)));
    const PoetEstimate w = precision_woodbury(e);
    const Matrix expected = Matrix::Identity(6, 6) - q * q.transpose() / 2.0;
    EXPECT_LE(norm_max(Matrix(w.precision_sigma->matrix() - expected)), 1e-14);
}

TEST(Woodbury, SingularComplementReported) {
    // T < p: the unthresholded residual covariance is rank deficient.
    const ReturnPanel panel = testing_util::factor_panel(30, 12, 1, 43);
    try {
        precision_woodbury(poet::poet(panel, FactorChoice::exactly(1), spec_of(0.0), ShrinkageRule::soft()));
        FAIL() << "expected SingularIdiosyncraticError";
    } catch (const SingularIdiosyncraticError& err) {
        EXPECT_EQ(err.threshold_constant(), 0.0);
        EXPECT_LE(err.lambda_min(), 1e-10);
    }
}

TEST(Evaluate, ExactEstimateHasZeroError) {
    const SimulatedPanel s = simulate_design2(20, 50, 2, 44);
    PoetEstimate e;
    e.Sigma_hat = s.truth.Sigma;
    e.Sigma_u_hat = s.truth.Sigma_u;
    e.factor_fit.Lambda_hat = s.truth.B;
    e.factor_fit.K = 2;
    e = precision_woodbury(e);
    const ErrorReport r = evaluate_against_truth(e, s.truth);
    EXPECT_LE(r.sigma_max, 1e-12);
    EXPECT_LE(r.sigma_spectral, 1e-12);
    EXPECT_LE(r.sigma_weighted, 1e-10);
    EXPECT_LE(r.sigma_relative, 1e-10);
    EXPECT_LE(*r.sigma_inv_spectral, 1e-8);
    EXPECT_LE(*r.sigma_u_spectral, 1e-12);
    EXPECT_LE(*r.sigma_u_inv_spectral, 1e-8);
    EXPECT_LE(*r.loading_subspace_distance, 1e-7);
}

TEST(Evaluate, ScaledIdentity) {
    const TrueModel t = identity_truth(7);
    const SymMatrix twice = 2.0 * SymMatrix::identity(7);
    const ErrorReport r = evaluate_covariance(twice, &twice, nullptr, nullptr, t, TruthInverses::from(t));
    EXPECT_NEAR(r.sigma_relative, 1.0, 1e-14);
    EXPECT_NEAR(r.sigma_weighted, 1.0, 1e-14);
    EXPECT_NEAR(*r.sigma_inv_spectral, 0.5, 1e-14);
}

TEST(Evaluate, SingularEstimateOmitsInverseMetrics) {
    const TrueModel t = identity_truth(4);
    const SymMatrix singular = SymMatrix::diagonal((Vector(4) << 1, 1, 1, 0).finished());
    const ErrorReport r = evaluate_covariance(singular, &singular, nullptr, nullptr, t, TruthInverses::from(t));
    EXPECT_FALSE(r.sigma_inv_spectral.has_value());
    EXPECT_FALSE(r.sigma_u_inv_spectral.has_value());
    EXPECT_NEAR(r.sigma_spectral, 1.0, 1e-14);
}

TEST(Evaluate, SingularTruthRejected) {
    TrueModel t = identity_truth(3);
    t.Sigma = SymMatrix::diagonal((Vector(3) << 1, 1, 0).finished());
    EXPECT_THROW(TruthInverses::from(t), SingularMatrixError);
}

TEST(SubspaceDistance, Basics) {
    const Matrix a = testing_util::gaussian(10, 2, 45);
    const Matrix mix = (Matrix(2, 2) << 1, 2, 3, -1).finished();
    EXPECT_LE(subspace_distance(a, a * mix), 1e-12);
    Matrix e1 = Matrix::Zero(4, 1);
    e1(0, 0) = 1;
    Matrix e2 = Matrix::Zero(4, 1);
    e2(1, 0) = 1;
    EXPECT_NEAR(subspace_distance(e1, e2), 1.0, 1e-14);
}

TEST(KnownFactors, RecoversTruthInLargeSamples) {
    const SimulatedPanel s = simulate_design2(10, 5000, 2, 46);
    const PoetEstimate e = known_factor_estimate(s.panel, s.truth.F, spec_of(0.5), ShrinkageRule::soft());
    EXPECT_EQ(e.K_used, 2);
    EXPECT_LE(norm_max(Matrix(e.Sigma_hat.matrix() - s.truth.Sigma.matrix())) / norm_max(s.truth.Sigma.matrix()),
              0.1);
    EXPECT_THROW(known_factor_estimate(s.panel, Matrix::Zero(10, 2), spec_of(0.5), ShrinkageRule::soft()),
                 std::invalid_argument);
}
