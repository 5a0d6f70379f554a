#include <sstream>

#include <gtest/gtest.h>

#include "poet/errors.hpp"
#include "poet/simulate.hpp"

using namespace poet;

namespace {

double lyapunov_residual(const Matrix& phi, const SymMatrix& eps, const SymMatrix& c) {
    return norm_max(Matrix(c.matrix() - phi * c.matrix() * phi.transpose() - eps.matrix()));
}

void expect_truth_consistent(const TrueModel& t) {
    const Matrix implied = t.B * t.factor_cov.matrix() * t.B.transpose() + t.Sigma_u.matrix();
    EXPECT_LE(norm_max(Matrix(implied - t.Sigma.matrix())), 1e-10);
}

}  // namespace

TEST(Var1, ZeroCoefficient) {
    const SymMatrix eps(Matrix(Eigen::Matrix3d::Identity() * 2.0));
    const SymMatrix c = var1_stationary_covariance(Matrix::Zero(3, 3), eps);
    EXPECT_LE(norm_max(Matrix(c.matrix() - eps.matrix())), 1e-15);
}

TEST(Var1, Scalar) {
    Matrix phi(1, 1);
    phi << 0.5;
    Matrix eps(1, 1);
    eps << 0.75;
    EXPECT_NEAR(var1_stationary_covariance(phi, SymMatrix(eps))(0, 0), 1.0, 1e-14);
}

TEST(Var1, PublishedParametersRecoverFactorCovariance) {
    const CalibrationParams params = CalibrationParams::defaults();
    const SymMatrix eps(Matrix(params.Sigma_eps));
    const SymMatrix c = var1_stationary_covariance(params.Phi, eps);
    EXPECT_LE(lyapunov_residual(params.Phi, eps, c), 1e-10);
    EXPECT_NEAR(c(0, 0), 1.0037, 1e-3);
    EXPECT_NEAR(c(1, 1), 0.9999, 1e-3);
    EXPECT_NEAR(c(2, 2), 0.9973, 1e-3);
}

TEST(Var1, NonStationaryRejected) {
    Matrix phi = Matrix::Identity(2, 2);
    EXPECT_THROW(var1_stationary_covariance(phi, SymMatrix::identity(2)), NonStationaryError);
}

TEST(Calibrated, DeterministicUnderSeed) {
    const CalibrationParams params = CalibrationParams::defaults();
    const SimulatedPanel a = simulate_calibrated(params, 30, 40, 17);
    const SimulatedPanel b = simulate_calibrated(params, 30, 40, 17);
    EXPECT_TRUE((a.panel.Y.array() == b.panel.Y.array()).all());
    const SimulatedPanel c = simulate_calibrated(params, 30, 40, 18);
    EXPECT_FALSE((a.panel.Y.array() == c.panel.Y.array()).all());
    expect_truth_consistent(a.truth);
}

TEST(Calibrated, FactorsArePervasive) {
    const SimulatedPanel s = simulate_calibrated(CalibrationParams::defaults(), 100, 300, 4);
    const Vector ev = eigh(s.truth.Sigma).eigenvalues;
    for (Index j = 0; j < 3; ++j) EXPECT_GT(ev(j), 5.0 * ev(3));
}

TEST(Calibrated, DegenerateLoadings) {
    CalibrationParams params = CalibrationParams::defaults();
    params.Phi.setZero();
    params.Sigma_eps.setIdentity();
    params.Sigma_B.setZero();
    params.mu_B << 1.0, 0.0, 0.0;
    params.mu_f.setZero();
    const SimulatedPanel s = simulate_calibrated(params, 5, 20000, 2);
    for (Index i = 0; i < 5; ++i) {
        EXPECT_EQ(s.truth.B(i, 0), 1.0);
        EXPECT_EQ(s.truth.B(i, 1), 0.0);
        EXPECT_EQ(s.truth.B(i, 2), 0.0);
    }
    // y_it - f_1t is the idiosyncratic error alone.
    const Matrix u = s.panel.Y - Vector::Ones(5) * s.truth.F.col(0).transpose();
    const Matrix su = u * u.transpose() / 20000.0;
    EXPECT_LE(norm_max(Matrix(su - s.truth.Sigma_u.matrix())), 0.02);
    const Matrix sy = s.panel.Y * s.panel.Y.transpose() / 20000.0;
    const Matrix rank_one = Matrix::Ones(5, 5) + s.truth.Sigma_u.matrix();
    EXPECT_LE(norm_max(Matrix(sy - rank_one)), 0.06);
}

TEST(ErrorCovariance, IdentityCorrelationWhenDegenerate) {
    CalibrationParams params = CalibrationParams::defaults();
    params.corr_mean = 0.0;
    params.corr_sd = 0.0;
    const SymMatrix su = calibrate_error_covariance(params, 20, 3);
    for (Index i = 0; i < 20; ++i) {
        for (Index j = 0; j < 20; ++j) {
            if (i != j) EXPECT_EQ(su(i, j), 0.0);
        }
        EXPECT_GT(su(i, i), 0.0);
    }
}

TEST(ErrorCovariance, AlwaysPositiveDefinite) {
    const CalibrationParams params = CalibrationParams::defaults();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        EXPECT_GT(min_eigenvalue(calibrate_error_covariance(params, 100, seed)), 0.0);
    }
}

TEST(ErrorCovariance, CorrelationThresholdInUnitInterval) {
    CalibrationParams params = CalibrationParams::defaults();
    params.corr_mean = 0.0;
    params.corr_sd = 0.1;
    params.corr_cap = 0.5;
    const ErrorCovarianceDraw d = draw_error_covariance(params, 10, 1);
    EXPECT_LE(d.correlation_threshold, 1.0);
    EXPECT_GE(d.correlation_threshold, 0.0);
}

TEST(Banded, Entries) {
    const SymMatrix s = generate_banded_sigma_u(20);
    EXPECT_EQ(s(0, 1), 0.5);
    EXPECT_EQ(s(0, 11), 0.0);
    EXPECT_EQ(s(0, 9), std::pow(0.5, 9));
    EXPECT_EQ(s(5, 5), 1.0);
    EXPECT_EQ(generate_banded_sigma_u(1)(0, 0), 1.0);
}

TEST(Ar1, Entries) {
    const SymMatrix s = generate_ar1_sigma(10);
    EXPECT_NEAR(s(0, 2), 0.7225, 1e-15);
    const SymMatrix id = generate_ar1_sigma(6, 0.0);
    EXPECT_LE(norm_max(Matrix(id.matrix() - Matrix::Identity(6, 6))), 0.0);
    EXPECT_GT(min_eigenvalue(generate_ar1_sigma(500)), 0.0);
}

TEST(Design2, Structure) {
    const SimulatedPanel a = simulate_design2(40, 60, 3, 5);
    const SimulatedPanel b = simulate_design2(40, 60, 3, 5);
    EXPECT_TRUE((a.panel.Y.array() == b.panel.Y.array()).all());
    EXPECT_EQ(a.truth.K(), 3);
    expect_truth_consistent(a.truth);
    EXPECT_LE(norm_max(Matrix(a.truth.Sigma_u.matrix() - generate_banded_sigma_u(40).matrix())), 0.0);
}

TEST(Design2, FactorCovarianceIsIdentityInLargeSamples) {
    const SimulatedPanel s = simulate_design2(5, 10000, 3, 8);
    const Matrix f = s.truth.F;
    const Matrix cov = f.transpose() * f / 10000.0;
    EXPECT_LE(norm_max(Matrix(cov - Matrix::Identity(3, 3))), 0.1);
}

TEST(Models, TruthMatchesDefinition) {
    const SimulatedPanel m1 = simulate_model1(30, 50, 1);
    EXPECT_EQ(m1.truth.K(), 1);
    expect_truth_consistent(m1.truth);
    const SimulatedPanel m2 = simulate_model2(30, 50, 1);
    EXPECT_EQ(m2.truth.K(), 0);
    EXPECT_LE(norm_max(Matrix(m2.truth.Sigma.matrix() - generate_banded_sigma_u(30).matrix())), 0.0);
    const SimulatedPanel m3 = simulate_model3(30, 50, 1);
    EXPECT_LE(norm_max(Matrix(m3.truth.Sigma.matrix() - generate_ar1_sigma(30).matrix())), 0.0);
}

TEST(CalibrationFile, RoundTrip) {
    CalibrationParams params = CalibrationParams::defaults();
    params.corr_sd = 0.13;
    params.set_gamma_from_moments(0.5, 0.2);
    std::stringstream ss;
    write_calibration(params, ss);
    const CalibrationParams back = parse_calibration(ss);
    EXPECT_EQ(back.corr_sd, 0.13);
    EXPECT_EQ(back.gamma_shape, params.gamma_shape);
    EXPECT_EQ(back.gamma_scale, params.gamma_scale);
    EXPECT_TRUE((back.Phi.array() == params.Phi.array()).all());
    EXPECT_TRUE((back.Sigma_B.array() == params.Sigma_B.array()).all());
}

TEST(CalibrationFile, GammaMoments) {
    CalibrationParams params = CalibrationParams::defaults();
    params.set_gamma_from_moments(0.4, 0.1);
    EXPECT_NEAR(params.gamma_shape * params.gamma_scale, 0.4, 1e-15);
    EXPECT_NEAR(params.gamma_shape * params.gamma_scale * params.gamma_scale, 0.01, 1e-15);
}

TEST(CalibrationFile, RejectsUnknownKey) {
    std::istringstream in("mu_B = 1, 2, 3\nbogus = 4\n");
    EXPECT_THROW(parse_calibration(in), std::exception);
}

TEST(Calibrate, RecoversGeneratorMoments) {
    const CalibrationParams truth = CalibrationParams::defaults();
    const SimulatedPanel s = simulate_calibrated(truth, 200, 600, 12);
    const CalibrationParams fit = calibrate_from_panel(s.panel);
    EXPECT_NO_THROW(fit.validate());
    EXPECT_LT(spectral_radius(fit.Phi), 1.0);
}
