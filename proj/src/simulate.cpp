#include "poet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "poet/errors.hpp"
#include "poet/factors.hpp"

namespace poet {

namespace {

// Stream tags under a replication seed.
constexpr std::uint64_t kErrorCovStream = 0x5e;
constexpr std::uint64_t kPanelStream = 0x01;

constexpr Index kBurnIn = 500;
constexpr int kMaxErrorCovAttempts = 100;
constexpr int kMaxTruncationDraws = 100000;

// Square root factor L with L L' = S for a symmetric PSD S; negative
// eigenvalues from rounding are clamped to zero.
Matrix psd_factor(const Matrix& s) {
    const SymmetricSpectrum sp = eigh(SymMatrix(s));
    const Vector root = sp.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    return sp.eigenvectors * root.asDiagonal();
}

Matrix cholesky_factor(const SymMatrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s.matrix());
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError(std::string(what) + ": covariance is not positive definite",
                                  min_eigenvalue(s));
    }
    return llt.matrixL();
}

bool cholesky_pd(const Matrix& s) {
    Eigen::LLT<Matrix> llt(s);
    return llt.info() == Eigen::Success && llt.rcond() > kPdTolerance;
}

TrueModel make_truth(Matrix b, SymMatrix factor_cov, SymMatrix sigma_u, Matrix f,
                     std::string design) {
    const Index p = sigma_u.dim();
    Matrix common = b.cols() > 0 ? Matrix(b * factor_cov.matrix() * b.transpose())
                                 : Matrix(Matrix::Zero(p, p));
    SymMatrix sigma(Matrix(common + sigma_u.matrix()));
    return TrueModel{std::move(b), std::move(factor_cov), std::move(sigma_u), std::move(sigma),
                     std::move(f), std::move(design)};
}

std::vector<double> parse_values(const std::string& text, std::size_t line) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    std::size_t col = 1;
    while (std::getline(ss, item, ',')) {
        std::stringstream cell(item);
        double v = 0.0;
        std::string rest;
        if (!(cell >> v) || (cell >> rest)) {
            throw ParseError("calibration value '" + item + "' is not numeric", line, col);
        }
        values.push_back(v);
        ++col;
    }
    return values;
}

template <int N>
void assign_vector(Eigen::Matrix<double, N, 1>& out, const std::vector<double>& v,
                   const std::string& key, std::size_t line) {
    if (v.size() != static_cast<std::size_t>(N)) {
        throw ParseError(key + " expects " + std::to_string(N) + " values", line, 1);
    }
    for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
}

void assign_matrix(Eigen::Matrix3d& out, const std::vector<double>& v, const std::string& key,
                   std::size_t line) {
    if (v.size() != 9) throw ParseError(key + " expects 9 values (row-major 3x3)", line, 1);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out(i, j) = v[static_cast<std::size_t>(3 * i + j)];
    }
}

double assign_scalar(const std::vector<double>& v, const std::string& key, std::size_t line) {
    if (v.size() != 1) throw ParseError(key + " expects a single value", line, 1);
    return v.front();
}

}  // namespace

Eigen::Matrix3d CalibrationParams::published_factor_covariance() {
    Eigen::Matrix3d c;
    c << 1.0037, 0.0011, -0.0009,
         0.0011, 0.9999, 0.0042,
        -0.0009, 0.0042, 0.9973;
    return c;
}

CalibrationParams CalibrationParams::defaults() {
    CalibrationParams p;
    p.mu_B << 0.0047, 0.0007, -1.8078;
    p.Sigma_B << 0.0767, -0.00004, 0.0087,
                -0.00004, 0.0841, 0.0013,
                 0.0087, 0.0013, 0.1649;
    p.mu_f << -0.0050, 0.0335, -0.0756;
    p.Phi << -0.0712, 0.0468, 0.1413,
             -0.0764, -0.0008, 0.0646,
              0.0195, -0.0071, -0.0544;
    const Eigen::Matrix3d cov = published_factor_covariance();
    p.Sigma_eps = cov - p.Phi * cov * p.Phi.transpose();
    p.Sigma_eps = 0.5 * (p.Sigma_eps + p.Sigma_eps.transpose()).eval();
    return p;
}

void CalibrationParams::set_gamma_from_moments(double mean, double sd) {
    if (!(mean > 0.0) || !(sd > 0.0)) {
        throw std::invalid_argument("gamma moments need mean > 0 and sd > 0");
    }
    gamma_shape = (mean / sd) * (mean / sd);
    gamma_scale = sd * sd / mean;
}

void CalibrationParams::validate() const {
    if (!(gamma_shape > 0.0) || !(gamma_scale > 0.0)) {
        throw std::invalid_argument("calibration: gamma shape and scale must be positive");
    }
    if (!(corr_cap > 0.0) || !(corr_cap < 1.0)) {
        throw std::invalid_argument("calibration: corr_cap must lie in (0, 1)");
    }
    if (!(corr_sd >= 0.0)) throw std::invalid_argument("calibration: corr_sd must be >= 0");
    if (corr_sd == 0.0 && std::abs(corr_mean) > corr_cap) {
        throw std::invalid_argument("calibration: corr_mean exceeds corr_cap with corr_sd = 0");
    }
    if (min_eigenvalue(SymMatrix(Matrix(Sigma_B))) < -1e-12) {
        throw std::invalid_argument("calibration: Sigma_B is not positive semidefinite");
    }
    if (!is_positive_definite(SymMatrix(Matrix(Sigma_eps)))) {
        throw std::invalid_argument("calibration: Sigma_eps is not positive definite");
    }
    const double rho = spectral_radius(Phi);
    if (!(rho < 1.0)) throw NonStationaryError(rho);
}

CalibrationParams parse_calibration(std::istream& in) {
    CalibrationParams params = CalibrationParams::defaults();
    std::optional<double> sigma_mean;
    std::optional<double> sigma_sd;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = raw.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line, 1);
        std::string key = raw.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        const std::vector<double> v = parse_values(raw.substr(eq + 1), line);

        if (key == "mu_B") assign_vector<3>(params.mu_B, v, key, line);
        else if (key == "Sigma_B") assign_matrix(params.Sigma_B, v, key, line);
        else if (key == "mu_f") assign_vector<3>(params.mu_f, v, key, line);
        else if (key == "Phi") assign_matrix(params.Phi, v, key, line);
        else if (key == "Sigma_eps") assign_matrix(params.Sigma_eps, v, key, line);
        else if (key == "gamma_shape") params.gamma_shape = assign_scalar(v, key, line);
        else if (key == "gamma_scale") params.gamma_scale = assign_scalar(v, key, line);
        else if (key == "sigma_mean") sigma_mean = assign_scalar(v, key, line);
        else if (key == "sigma_sd") sigma_sd = assign_scalar(v, key, line);
        else if (key == "corr_mean") params.corr_mean = assign_scalar(v, key, line);
        else if (key == "corr_sd") params.corr_sd = assign_scalar(v, key, line);
        else if (key == "corr_cap") params.corr_cap = assign_scalar(v, key, line);
        else throw ParseError("unknown calibration key '" + key + "'", line, 1);
    }
    if (sigma_mean.has_value() != sigma_sd.has_value()) {
        throw ParseError("sigma_mean and sigma_sd must be given together", line, 1);
    }
    if (sigma_mean) params.set_gamma_from_moments(*sigma_mean, *sigma_sd);
    params.validate();
    return params;
}

CalibrationParams read_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open calibration file: " + path.string());
    return parse_calibration(in);
}

void write_calibration(const CalibrationParams& params, std::ostream& out) {
    auto vec = [&](const char* key, const Eigen::Vector3d& v) {
        out << key << " = " << format_double(v(0)) << ", " << format_double(v(1)) << ", "
            << format_double(v(2)) << '\n';
    };
    auto mat = [&](const char* key, const Eigen::Matrix3d& m) {
        out << key << " =";
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) out << (i + j == 0 ? " " : ", ") << format_double(m(i, j));
        }
        out << '\n';
    };
    out << "# factor loadings b_i ~ N_3(mu_B, Sigma_B)\n";
    vec("mu_B", params.mu_B);
    mat("Sigma_B", params.Sigma_B);
    out << "# factors f_t = mu_f + Phi f_{t-1} + eps_t, eps_t ~ N_3(0, Sigma_eps)\n";
    vec("mu_f", params.mu_f);
    mat("Phi", params.Phi);
    mat("Sigma_eps", params.Sigma_eps);
    out << "# error standard deviations ~ Gamma(shape, scale)\n";
    out << "gamma_shape = " << format_double(params.gamma_shape) << '\n';
    out << "gamma_scale = " << format_double(params.gamma_scale) << '\n';
    out << "# error correlations ~ N(corr_mean, corr_sd) truncated to |r| <= corr_cap\n";
    out << "corr_mean = " << format_double(params.corr_mean) << '\n';
    out << "corr_sd = " << format_double(params.corr_sd) << '\n';
    out << "corr_cap = " << format_double(params.corr_cap) << '\n';
}

double spectral_radius(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(a, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SymMatrix var1_stationary_covariance(const Matrix& phi, const SymMatrix& sigma_eps) {
    const Index k = phi.rows();
    if (phi.cols() != k || sigma_eps.dim() != k) {
        throw std::invalid_argument("var1_stationary_covariance: dimension mismatch");
    }
    const double rho = spectral_radius(phi);
    if (!(rho < 1.0)) throw NonStationaryError(rho);

    // Column-major vec: vec(Phi C Phi') = (Phi (x) Phi) vec(C).
    const Index n = k * k;
    Matrix system = Matrix::Identity(n, n);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            system.block(i * k, j * k, k, k) -= phi(i, j) * phi;
        }
    }
    const Vector rhs = Eigen::Map<const Vector>(sigma_eps.matrix().data(), n);
    const Vector sol = system.partialPivLu().solve(rhs);
    return SymMatrix(Matrix(Eigen::Map<const Matrix>(sol.data(), k, k)));
}

ErrorCovarianceDraw draw_error_covariance(const CalibrationParams& params, Index p,
                                          std::uint64_t seed) {
    if (p < 1) throw std::invalid_argument("draw_error_covariance: p must be >= 1");
    params.validate();

    for (int attempt = 0; attempt < kMaxErrorCovAttempts; ++attempt) {
        Engine rng = make_engine(derive_seed(seed, kErrorCovStream), static_cast<std::uint64_t>(attempt));
        std::gamma_distribution<double> gamma(params.gamma_shape, params.gamma_scale);
        Vector sd(p);
        for (Index i = 0; i < p; ++i) sd(i) = gamma(rng);

        Matrix raw = Matrix::Identity(p, p);
        std::normal_distribution<double> corr(params.corr_mean, params.corr_sd);
        for (Index j = 0; j < p; ++j) {
            for (Index i = j + 1; i < p; ++i) {
                double x = params.corr_mean;
                if (params.corr_sd > 0.0) {
                    int draws = 0;
                    do {
                        x = corr(rng);
                        if (++draws > kMaxTruncationDraws) {
                            throw std::invalid_argument(
                                "draw_error_covariance: truncation region has negligible mass");
                        }
                    } while (std::abs(x) > params.corr_cap);
                }
                raw(i, j) = x;
                raw(j, i) = x;
            }
        }

        // Lower the hard threshold from 1 in steps of 0.01 until positive
        // definiteness fails; keep the last positive definite level.
        Matrix sigma0 = Matrix::Identity(p, p);
        double level = 1.0;
        Index kept = 0;
        for (int step = 1; step <= 100; ++step) {
            const double candidate_level = 1.0 - 0.01 * step;
            Matrix candidate = Matrix::Identity(p, p);
            Index count = 0;
            for (Index j = 0; j < p; ++j) {
                for (Index i = j + 1; i < p; ++i) {
                    if (std::abs(raw(i, j)) > candidate_level) {
                        candidate(i, j) = raw(i, j);
                        candidate(j, i) = raw(i, j);
                        ++count;
                    }
                }
            }
            if (count != kept && !cholesky_pd(candidate)) break;
            sigma0 = std::move(candidate);
            level = candidate_level;
            kept = count;
        }

        SymMatrix sigma_u(Matrix(sd.asDiagonal() * sigma0 * sd.asDiagonal()));
        if (cholesky_pd(sigma_u.matrix())) {
            return ErrorCovarianceDraw{std::move(sigma_u), level};
        }
    }
    throw NumericalError("draw_error_covariance: no positive definite draw after " +
                         std::to_string(kMaxErrorCovAttempts) + " attempts");
}

SymMatrix calibrate_error_covariance(const CalibrationParams& params, Index p,
                                     std::uint64_t seed) {
    return draw_error_covariance(params, p, seed).Sigma_u;
}

SymMatrix generate_banded_sigma_u(Index p, double decay, Index bandwidth) {
    if (p < 1 || bandwidth < 0) throw std::invalid_argument("generate_banded_sigma_u: bad size");
    Matrix s = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = std::max<Index>(0, i - bandwidth); j <= std::min(p - 1, i + bandwidth); ++j) {
            s(i, j) = std::pow(decay, static_cast<double>(std::abs(i - j)));
        }
    }
    return SymMatrix(std::move(s));
}

SymMatrix generate_ar1_sigma(Index p, double rho) {
    if (p < 1) throw std::invalid_argument("generate_ar1_sigma: p must be >= 1");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("generate_ar1_sigma: |rho| must be < 1");
    Matrix s(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
    return SymMatrix(std::move(s));
}

SimulatedPanel simulate_calibrated(const CalibrationParams& params, Index p, Index T,
                                   std::uint64_t seed, const std::optional<SymMatrix>& sigma_u) {
    if (p < 1 || T < 2) throw std::invalid_argument("simulate_calibrated: need p >= 1, T >= 2");
    params.validate();
    SymMatrix su = sigma_u ? *sigma_u : calibrate_error_covariance(params, p, seed);
    if (su.dim() != p) throw std::invalid_argument("simulate_calibrated: Sigma_u has wrong size");

    Engine rng = make_engine(seed, kPanelStream);
    const Matrix lb = psd_factor(params.Sigma_B);
    Matrix b = standard_normal(rng, p, 3) * lb.transpose();
    b.rowwise() += params.mu_B.transpose();

    const Matrix le = psd_factor(params.Sigma_eps);
    const Eigen::Vector3d mean = (Eigen::Matrix3d::Identity() - params.Phi).lu().solve(params.mu_f);
    Eigen::Vector3d f = mean;
    Matrix factors(T, 3);
    for (Index t = -kBurnIn; t < T; ++t) {
        const Vector eps = le * standard_normal(rng, 3, 1);
        f = params.mu_f + params.Phi * f + eps;
        if (t >= 0) factors.row(t) = f.transpose();
    }

    const Matrix lu = cholesky_factor(su, "simulate_calibrated");
    const Matrix u = lu * standard_normal(rng, p, T);
    Matrix y = b * factors.transpose() + u;

    SymMatrix cov_f = var1_stationary_covariance(params.Phi, SymMatrix(Matrix(params.Sigma_eps)));
    TrueModel truth = make_truth(std::move(b), std::move(cov_f), std::move(su),
                                 std::move(factors), "calibrated");
    return SimulatedPanel{ReturnPanel::from_matrix(std::move(y)), std::move(truth)};
}

SimulatedPanel simulate_gaussian_factor_model(const SymMatrix& sigma_u, Index K, Index T,
                                              std::uint64_t seed, std::string design) {
    const Index p = sigma_u.dim();
    if (p < 1 || T < 2 || K < 0) {
        throw std::invalid_argument("simulate_gaussian_factor_model: need p >= 1, T >= 2, K >= 0");
    }
    Engine rng = make_engine(seed, kPanelStream);
    Matrix b = standard_normal(rng, p, K);
    Matrix f = standard_normal(rng, T, K);
    const Matrix lu = cholesky_factor(sigma_u, "simulate_gaussian_factor_model");
    Matrix y = lu * standard_normal(rng, p, T);
    if (K > 0) y += b * f.transpose();
    TrueModel truth = make_truth(std::move(b), SymMatrix::identity(K), sigma_u, std::move(f),
                                 std::move(design));
    return SimulatedPanel{ReturnPanel::from_matrix(std::move(y)), std::move(truth)};
}

SimulatedPanel simulate_design2(Index p, Index T, Index K, std::uint64_t seed) {
    return simulate_gaussian_factor_model(generate_banded_sigma_u(p), K, T, seed, "design2");
}

SimulatedPanel simulate_model1(Index p, Index T, std::uint64_t seed) {
    return simulate_gaussian_factor_model(generate_banded_sigma_u(p), 1, T, seed, "model1");
}

SimulatedPanel simulate_model2(Index p, Index T, std::uint64_t seed) {
    return simulate_gaussian_factor_model(generate_banded_sigma_u(p), 0, T, seed, "model2");
}

SimulatedPanel simulate_model3(Index p, Index T, std::uint64_t seed) {
    return simulate_gaussian_factor_model(generate_ar1_sigma(p), 0, T, seed, "model3");
}

CalibrationParams calibrate_from_panel(const ReturnPanel& panel, double corr_cap) {
    const Index p = panel.p();
    const Index T = panel.T();
    if (p < 4 || T < 8) throw std::invalid_argument("calibrate_from_panel: need p >= 4, T >= 8");
    const ReturnPanel centered = demean(panel);
    const FactorFit fit = estimate_factors(centered, 3);

    CalibrationParams params = CalibrationParams::defaults();
    const Matrix& b = fit.Lambda_hat;
    params.mu_B = b.colwise().mean().transpose();
    const Matrix bc = b.rowwise() - params.mu_B.transpose();
    params.Sigma_B = bc.transpose() * bc / static_cast<double>(p - 1);

    // Least squares VAR(1): f_t = mu + Phi f_{t-1} + eps_t, t = 2..T.
    const Index n = T - 1;
    Matrix x(n, 4);
    x.col(0).setOnes();
    x.rightCols(3) = fit.F_hat.topRows(n);
    const Matrix target = fit.F_hat.bottomRows(n);
    const Matrix coef = (x.transpose() * x).ldlt().solve(x.transpose() * target);  // 4 x 3
    params.mu_f = coef.row(0).transpose();
    params.Phi = coef.bottomRows(3).transpose();
    const Matrix resid = target - x * coef;
    params.Sigma_eps = resid.transpose() * resid / static_cast<double>(n - 4);

    const Vector sd = (fit.U_hat.rowwise().squaredNorm() / static_cast<double>(T)).cwiseSqrt();
    const double sd_mean = sd.mean();
    const double sd_sd = std::sqrt((sd.array() - sd_mean).square().sum() / static_cast<double>(p - 1));
    params.set_gamma_from_moments(sd_mean, sd_sd);

    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    const Matrix cov = fit.U_hat * fit.U_hat.transpose() / static_cast<double>(T);
    for (Index j = 0; j < p; ++j) {
        for (Index i = j + 1; i < p; ++i) {
            const double r = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
            if (std::abs(r) <= corr_cap) {
                sum += r;
                sum_sq += r * r;
                ++count;
            }
        }
    }
    params.corr_cap = corr_cap;
    if (count > 1) {
        params.corr_mean = sum / static_cast<double>(count);
        const double var = (sum_sq - sum * params.corr_mean) / static_cast<double>(count - 1);
        params.corr_sd = std::sqrt(std::max(var, 0.0));
    }
    return params;
}

}  // namespace poet
