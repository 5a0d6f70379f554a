#include "poet/estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "poet/errors.hpp"

namespace poet {

namespace {

struct ResolvedK {
    Index K = 0;
    std::optional<FactorSelection> selection;
};

ResolvedK resolve_k(const ReturnPanel& panel, const FactorChoice& k) {
    if (k.fixed) return {*k.fixed, std::nullopt};
    const Index cap = std::min(k.max_factors, std::min(panel.p(), panel.T()) - 1);
    FactorSelection sel = select_num_factors(panel, std::max<Index>(cap, 0), k.variant);
    const Index K = sel.K_hat;
    return {K, std::move(sel)};
}

// Shared threshold builder for both routes: residual moments of the
// least-squares residuals, `raw` supplies the diagonal for the correlation style.
Matrix shared_tau(const ThresholdSpec& spec, const SymMatrix& raw, const Matrix& u_hat,
                  std::optional<ResidualMoments>& moments) {
    if (spec.style == ThresholdStyle::adaptive_theta && !std::isinf(spec.C) && spec.C != 0.0) {
        if (!moments) moments = residual_moments(u_hat);
        return build_tau(spec, raw, &moments->theta);
    }
    if (spec.style == ThresholdStyle::adaptive_theta) {
        // C = 0 or C = inf: tau is 0 or inf regardless of theta.
        const Matrix theta = Matrix::Zero(raw.dim(), raw.dim());
        return build_tau(spec, raw, &theta);
    }
    return build_tau(spec, raw, nullptr);
}

void check_inputs(const ReturnPanel& panel, const ThresholdSpec& spec, const ShrinkageRule& rule) {
    spec.validate();
    rule.validate();
    if (panel.p() < 1 || panel.T() < 2) throw std::invalid_argument("poet: panel too small");
}

// Inverse of a nonsingular symmetric matrix that need not be positive
// definite; empty when LU reports it singular.
std::optional<SymMatrix> general_inverse(const SymMatrix& s) {
    try {
        return spd_inverse(s);
    } catch (const NumericalError&) {
    }
    const Eigen::FullPivLU<Matrix> lu(s.matrix());
    if (!lu.isInvertible() || !(lu.rcond() > kPdTolerance)) return std::nullopt;
    return SymMatrix(Matrix(lu.inverse()));
}

double identity_residual(const Matrix& a, const Matrix& b) {
    Matrix r = a * b;
    r.diagonal().array() -= 1.0;
    return norm_max(r);
}

}  // namespace

Index resolve_num_factors(const ReturnPanel& panel, const FactorChoice& choice) {
    return resolve_k(panel, choice).K;
}

PrincipalComplement principal_complement(const SymMatrix& sigma_sam,
                                         const SymmetricSpectrum& spectrum, Index K) {
    const Index p = sigma_sam.dim();
    if (K < 0 || K > p) {
        throw std::invalid_argument("principal_complement: K = " + std::to_string(K) +
                                    " outside [0, " + std::to_string(p) + "]");
    }
    if (K == 0) return {SymMatrix::zero(p), sigma_sam};
    SymMatrix low(spectrum.leading_part(K));
    if (K == p) return {low, SymMatrix::zero(p)};
    SymMatrix rest(Matrix(sigma_sam.matrix() - low.matrix()));
    return {std::move(low), std::move(rest)};
}

PrincipalComplement principal_complement(const SymMatrix& sigma_sam, Index K) {
    if (K < 0 || K > sigma_sam.dim()) {
        throw std::invalid_argument("principal_complement: K out of range");
    }
    if (K == 0) return {SymMatrix::zero(sigma_sam.dim()), sigma_sam};
    return principal_complement(sigma_sam, eigh(sigma_sam), K);
}

PoetEstimate poet(const ReturnPanel& panel, const FactorChoice& k, const ThresholdSpec& spec_in,
                  const ShrinkageRule& rule) {
    check_inputs(panel, spec_in, rule);
    const ThresholdSpec spec = spec_in.resolved(panel.p(), panel.T());
    ResolvedK resolved = resolve_k(panel, k);
    const Index K = resolved.K;

    const SymMatrix sigma_sam = sample_covariance(panel);
    if (K > panel.p()) throw std::invalid_argument("poet: K exceeds p");
    PrincipalComplement pc = K == 0 ? principal_complement(sigma_sam, 0)
                                    : principal_complement(sigma_sam, eigh(sigma_sam), K);
    FactorFit fit = estimate_factors(panel, K);

    std::optional<ResidualMoments> moments;
    const Matrix tau = shared_tau(spec, pc.R_K, fit.U_hat, moments);
    SymMatrix r_thr = threshold_covariance(pc.R_K, tau, rule);

    // Sigma_sam + (R^T - R_K) reproduces Sigma_sam bitwise when nothing is
    // thresholded; it equals low_rank + R^T up to rounding otherwise.
    SymMatrix sigma_hat = K == 0 ? r_thr
                                 : SymMatrix(Matrix(sigma_sam.matrix() +
                                                    (r_thr.matrix() - pc.R_K.matrix())));

    PoetEstimate est;
    est.Sigma_hat = std::move(sigma_hat);
    est.Sigma_u_hat = std::move(r_thr);
    est.low_rank = std::move(pc.low_rank);
    est.K_used = K;
    est.C_used = spec.C;
    est.rule = rule;
    est.spec = spec;
    est.factor_fit = std::move(fit);
    est.selection = std::move(resolved.selection);
    return est;
}

PoetEstimate poet_substitution(const ReturnPanel& panel, const FactorChoice& k,
                               const ThresholdSpec& spec_in, const ShrinkageRule& rule) {
    check_inputs(panel, spec_in, rule);
    const ThresholdSpec spec = spec_in.resolved(panel.p(), panel.T());
    ResolvedK resolved = resolve_k(panel, k);
    FactorFit fit = estimate_factors(panel, resolved.K);

    std::optional<ResidualMoments> moments = residual_moments(fit.U_hat);
    const Matrix tau = shared_tau(spec, moments->sigma, fit.U_hat, moments);
    SymMatrix sigma_u = threshold_covariance(moments->sigma, tau, rule);
    SymMatrix common = fit.common_covariance();

    PoetEstimate est;
    est.Sigma_hat = common + sigma_u;
    est.Sigma_u_hat = std::move(sigma_u);
    est.low_rank = std::move(common);
    est.K_used = resolved.K;
    est.C_used = spec.C;
    est.rule = rule;
    est.spec = spec;
    est.factor_fit = std::move(fit);
    est.selection = std::move(resolved.selection);
    return est;
}

PoetEstimate strict_factor_estimate(const ReturnPanel& panel, const FactorChoice& k) {
    ThresholdSpec spec;
    spec.C = std::numeric_limits<double>::infinity();
    spec.style = ThresholdStyle::constant;
    return poet(panel, k, spec, ShrinkageRule::hard());
}

PoetEstimate known_factor_estimate(const ReturnPanel& panel, const Matrix& factors,
                                   const ThresholdSpec& spec_in, const ShrinkageRule& rule) {
    check_inputs(panel, spec_in, rule);
    if (factors.rows() != panel.T()) {
        throw std::invalid_argument("known_factor_estimate: factor series length != T");
    }
    const ThresholdSpec spec = spec_in.resolved(panel.p(), panel.T());
    const Index K = factors.cols();
    const double t = static_cast<double>(panel.T());

    const Matrix y = demean(panel).Y;
    Matrix f = factors;
    f.rowwise() -= f.colwise().mean();
    const Matrix cov_f = f.transpose() * f / t;
    const Eigen::LLT<Matrix> llt(cov_f);
    if (K > 0 && llt.info() != Eigen::Success) {
        throw SingularMatrixError("known_factor_estimate: factor covariance is singular",
                                  min_eigenvalue(SymMatrix(cov_f)));
    }
    // OLS loadings B = Y F (F'F)^{-1}.
    const Matrix b = K > 0 ? Matrix(llt.solve((y * f / t).transpose()).transpose())
                           : Matrix(panel.p(), 0);
    FactorFit fit;
    fit.K = K;
    fit.U_hat = y - b * f.transpose();
    if (K > 0) {
        const Matrix l = llt.matrixL();
        fit.Lambda_hat = b * l;  // Lambda Lambda' = B cov(F) B'
        fit.F_hat = l.triangularView<Eigen::Lower>().solve(f.transpose()).transpose();
    } else {
        fit.Lambda_hat = Matrix(panel.p(), 0);
        fit.F_hat = Matrix(panel.T(), 0);
    }
    fit.top_eigenvalues = Vector(0);

    std::optional<ResidualMoments> moments = residual_moments(fit.U_hat);
    const Matrix tau = shared_tau(spec, moments->sigma, fit.U_hat, moments);
    SymMatrix sigma_u = threshold_covariance(moments->sigma, tau, rule);
    SymMatrix common = fit.common_covariance();

    PoetEstimate est;
    est.Sigma_hat = common + sigma_u;
    est.Sigma_u_hat = std::move(sigma_u);
    est.low_rank = std::move(common);
    est.K_used = K;
    est.C_used = spec.C;
    est.rule = rule;
    est.spec = spec;
    est.factor_fit = std::move(fit);
    return est;
}

PoetEstimate precision_woodbury(PoetEstimate est) {
    const SymMatrix& su = est.Sigma_u_hat;
    SymMatrix a;
    try {
        a = spd_inverse(su);
    } catch (const SingularMatrixError& e) {
        throw SingularIdiosyncraticError(e.lambda_min(), est.C_used);
    }
    const Matrix& lambda = est.factor_fit.Lambda_hat;
    const Index K = lambda.cols();
    Matrix precision = a.matrix();
    if (K > 0) {
        const Matrix al = a.matrix() * lambda;  // p x K
        Matrix inner = lambda.transpose() * al;
        inner.diagonal().array() += 1.0;
        const Matrix corr = al * inner.ldlt().solve(al.transpose());
        precision -= corr;
    }
    est.precision_sigma = SymMatrix(std::move(precision));
    est.precision_sigma_u = std::move(a);
    est.woodbury_residual =
        identity_residual(est.Sigma_hat.matrix(), est.precision_sigma->matrix());
    return est;
}

TruthInverses TruthInverses::from(const TrueModel& truth) {
    TruthInverses out;
    out.sigma_inv_sqrt = inv_sqrt(truth.Sigma);
    out.sigma_inv = SymMatrix(Matrix(out.sigma_inv_sqrt.matrix() * out.sigma_inv_sqrt.matrix()));
    try {
        out.sigma_u_inv = spd_inverse(truth.Sigma_u);
    } catch (const SingularMatrixError&) {
        out.sigma_u_inv.reset();
    }
    return out;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
    if (a.cols() == 0 || b.cols() == 0) return 1.0;
    const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() *
                      Matrix::Identity(a.rows(), a.cols());
    const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() *
                      Matrix::Identity(b.rows(), b.cols());
    Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
    const Vector s = svd.singularValues();
    const double cmin = std::min(1.0, s(s.size() - 1));
    return std::sqrt(std::max(0.0, 1.0 - cmin * cmin));
}

ErrorReport evaluate_covariance(const SymMatrix& sigma_hat, const SymMatrix* sigma_u_hat,
                                const SymMatrix* precision, const SymMatrix* precision_u,
                                const TrueModel& truth, const TruthInverses& inv) {
    if (sigma_hat.dim() != truth.p()) {
        throw std::invalid_argument("evaluate: estimate and truth dimensions differ");
    }
    ErrorReport r;
    const Matrix diff = sigma_hat.matrix() - truth.Sigma.matrix();
    r.sigma_weighted = weighted_quadratic_norm_with(sigma_hat, inv.sigma_inv_sqrt);
    r.sigma_max = norm_max(diff);
    r.sigma_spectral = norm_spectral(SymMatrix(diff));
    r.sigma_relative = relative_spectral_error_with(sigma_hat, inv.sigma_inv_sqrt);

    std::optional<SymMatrix> owned;
    if (precision == nullptr) {
        owned = general_inverse(sigma_hat);
        if (owned) precision = &*owned;
    }
    if (precision != nullptr) {
        r.sigma_inv_spectral =
            norm_spectral(SymMatrix(Matrix(precision->matrix() - inv.sigma_inv.matrix())));
    }
    if (sigma_u_hat != nullptr) {
        r.sigma_u_spectral =
            norm_spectral(SymMatrix(Matrix(sigma_u_hat->matrix() - truth.Sigma_u.matrix())));
        std::optional<SymMatrix> owned_u;
        if (precision_u == nullptr) {
            owned_u = general_inverse(*sigma_u_hat);
            if (owned_u) precision_u = &*owned_u;
        }
        if (precision_u != nullptr && inv.sigma_u_inv) {
            r.sigma_u_inv_spectral = norm_spectral(
                SymMatrix(Matrix(precision_u->matrix() - inv.sigma_u_inv->matrix())));
        }
    }
    return r;
}

ErrorReport evaluate_against_truth(const PoetEstimate& est, const TrueModel& truth,
                                   const TruthInverses& inv) {
    const SymMatrix* precision = est.precision_sigma ? &*est.precision_sigma : nullptr;
    const SymMatrix* precision_u = est.precision_sigma_u ? &*est.precision_sigma_u : nullptr;
    ErrorReport r = evaluate_covariance(est.Sigma_hat, &est.Sigma_u_hat, precision, precision_u,
                                        truth, inv);
    if (est.K_used > 0 && truth.K() > 0) {
        r.loading_subspace_distance = subspace_distance(est.factor_fit.Lambda_hat, truth.B);
    }
    return r;
}

ErrorReport evaluate_against_truth(const PoetEstimate& est, const TrueModel& truth) {
    return evaluate_against_truth(est, truth, TruthInverses::from(truth));
}

}  // namespace poet
