#include "poet/factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace poet {

namespace {

// Eigenvalues below this fraction of the largest are treated as zero when
// deciding whether the p x p route can produce F_hat.
constexpr double kNullEigenvalue = 1e-12;

// log(max(x, kLogFloor)) guards exact low-rank panels.
constexpr double kLogFloor = 1e-300;

void orient_columns(Matrix& lambda, Matrix& f) {
    for (Index k = 0; k < lambda.cols(); ++k) {
        const bool use_f = lambda.col(k).cwiseAbs().maxCoeff() == 0.0;
        const auto col = use_f ? f.col(k) : lambda.col(k);
        Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) {
            lambda.col(k) = -lambda.col(k);
            f.col(k) = -f.col(k);
        }
    }
}

FactorFit fit_time_gram(const Matrix& y, Index K) {
    const double t = static_cast<double>(y.cols());
    Matrix g(y.cols(), y.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / t);
    const SymmetricSpectrum sp = eigh(SymMatrix(Matrix(g.selfadjointView<Eigen::Lower>())));

    FactorFit fit;
    fit.K = K;
    fit.top_eigenvalues = sp.eigenvalues.head(K);
    fit.F_hat = std::sqrt(t) * sp.eigenvectors.leftCols(K);
    fit.Lambda_hat = y * fit.F_hat / t;
    return fit;
}

FactorFit fit_asset_gram(const Matrix& y, Index K, bool& degenerate) {
    const double t = static_cast<double>(y.cols());
    Matrix s(y.rows(), y.rows());
    s.setZero();
    s.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / t);
    const SymmetricSpectrum sp = eigh(SymMatrix(Matrix(s.selfadjointView<Eigen::Lower>())));

    FactorFit fit;
    fit.K = K;
    fit.top_eigenvalues = sp.eigenvalues.head(K);
    const double top = std::max(sp.eigenvalues(0), 0.0);
    degenerate = K > 0 && !(sp.eigenvalues(K - 1) > kNullEigenvalue * top);
    if (degenerate) return fit;

    const Vector root = fit.top_eigenvalues.array().sqrt();
    const auto xi = sp.eigenvectors.leftCols(K);
    fit.Lambda_hat = xi * root.asDiagonal();
    fit.F_hat = y.transpose() * xi * root.cwiseInverse().asDiagonal();
    return fit;
}

}  // namespace

SymMatrix FactorFit::common_covariance() const {
    if (K == 0) return SymMatrix::zero(U_hat.rows());
    return SymMatrix(Matrix(Lambda_hat * Lambda_hat.transpose()));
}

FactorFit estimate_factors(const ReturnPanel& panel, Index K, FactorRoute route) {
    const Index p = panel.p();
    const Index T = panel.T();
    if (K < 0 || K > std::min(p, T)) {
        throw std::invalid_argument("estimate_factors: K = " + std::to_string(K) +
                                    " outside [0, min(p, T) = " +
                                    std::to_string(std::min(p, T)) + "]");
    }
    if (!panel.Y.allFinite()) throw std::invalid_argument("estimate_factors: non-finite panel");

    FactorFit fit;
    if (K == 0) {
        fit.F_hat = Matrix(T, 0);
        fit.Lambda_hat = Matrix(p, 0);
        fit.U_hat = panel.Y;
        fit.top_eigenvalues = Vector(0);
        return fit;
    }

    if (route == FactorRoute::automatic) {
        route = p < T ? FactorRoute::asset_gram : FactorRoute::time_gram;
    }
    bool degenerate = false;
    if (route == FactorRoute::asset_gram) {
        fit = fit_asset_gram(panel.Y, K, degenerate);
    }
    if (route == FactorRoute::time_gram || degenerate) {
        fit = fit_time_gram(panel.Y, K);
    }
    orient_columns(fit.Lambda_hat, fit.F_hat);
    fit.U_hat = panel.Y - fit.Lambda_hat * fit.F_hat.transpose();
    return fit;
}

double ic_penalty(Index T, Index p, IcVariant variant) {
    if (T < 1 || p < 1) throw std::invalid_argument("ic_penalty: T and p must be positive");
    const double pt = static_cast<double>(p) * static_cast<double>(T);
    const double sum = static_cast<double>(p) + static_cast<double>(T);
    const double scale = sum / pt;
    switch (variant) {
        case IcVariant::ic1:
            return scale * std::log(pt / sum);
        case IcVariant::ic2:
            return scale * std::log(static_cast<double>(std::min(p, T)));
    }
    throw std::invalid_argument("ic_penalty: unknown variant");
}

FactorSelection select_num_factors(const ReturnPanel& panel, Index M, IcVariant variant) {
    const Index p = panel.p();
    const Index T = panel.T();
    if (M < 0 || M > std::min(p, T) - 1) {
        throw std::invalid_argument("select_num_factors: M = " + std::to_string(M) +
                                    " outside [0, min(p, T) - 1]");
    }
    // ||Y - T^{-1} Y F F'||_F^2 / (pT) = p^{-1} sum_{k > K} lambda_k with lambda
    // the eigenvalues of T^{-1} Y Y' (equivalently of T^{-1} Y'Y).
    const double t = static_cast<double>(T);
    const bool time_side = T <= p;
    Matrix g(time_side ? T : p, time_side ? T : p);
    g.setZero();
    if (time_side) {
        g.selfadjointView<Eigen::Lower>().rankUpdate(panel.Y.transpose(), 1.0 / t);
    } else {
        g.selfadjointView<Eigen::Lower>().rankUpdate(panel.Y, 1.0 / t);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(g.selfadjointView<Eigen::Lower>()),
                                                 Eigen::EigenvaluesOnly);
    Vector ev = solver.eigenvalues().reverse();  // descending
    ev = ev.cwiseMax(0.0);

    const Index n = ev.size();
    Vector tail(n + 1);
    tail(n) = 0.0;
    for (Index k = n - 1; k >= 0; --k) tail(k) = tail(k + 1) + ev(k);

    const double g_tp = ic_penalty(T, p, variant);
    const double v0 = tail(0) / static_cast<double>(p);

    FactorSelection out;
    out.curve.reserve(static_cast<std::size_t>(M + 1));
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k <= M; ++k) {
        const double v = tail(k) / static_cast<double>(p);
        IcPoint point;
        point.K = k;
        point.log_residual = std::log(std::max(v, kLogFloor));
        point.penalty = static_cast<double>(k) * g_tp;
        point.total = point.log_residual + point.penalty;
        out.curve.push_back(point);
        if (point.total < best) {
            best = point.total;
            out.K_hat = k;
        }
    }
    for (Index k = 0; k <= M; ++k) {
        const double v = tail(k) / static_cast<double>(p);
        if (v <= 1e-12 * v0 || v0 == 0.0) {
            out.K_hat = k;
            out.exact_low_rank = true;
            break;
        }
    }
    return out;
}

}  // namespace poet
