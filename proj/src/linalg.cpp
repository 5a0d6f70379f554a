#include "poet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "poet/errors.hpp"

namespace poet {

SymMatrix::SymMatrix(const Matrix& a) : m_(a) { symmetrize(); }

SymMatrix::SymMatrix(Matrix&& a) : m_(std::move(a)) { symmetrize(); }

void SymMatrix::symmetrize() {
    if (m_.rows() != m_.cols()) {
        throw std::invalid_argument("SymMatrix: matrix is " + std::to_string(m_.rows()) +
                                    "x" + std::to_string(m_.cols()) + ", not square");
    }
    const Index p = m_.rows();
    for (Index j = 0; j < p; ++j) {
        for (Index i = j + 1; i < p; ++i) {
            const double v = 0.5 * (m_(i, j) + m_(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(Matrix(a.m_ + b.m_));
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(Matrix(a.m_ - b.m_));
}

SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(Matrix(s * a.m_)); }

Matrix SymmetricSpectrum::leading_part(Index k) const {
    const Index p = dim();
    if (k < 0 || k > p) {
        throw std::invalid_argument("leading_part: k out of range");
    }
    if (k == 0) return Matrix::Zero(p, p);
    const auto v = eigenvectors.leftCols(k);
    return v * eigenvalues.head(k).asDiagonal() * v.transpose();
}

SymmetricSpectrum eigh(const SymMatrix& s) {
    if (!s.all_finite()) {
        throw NonFiniteError("eigh: matrix has non-finite entries");
    }
    const Index p = s.dim();
    SymmetricSpectrum out;
    if (p == 0) return out;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigh: symmetric eigensolver did not converge");
    }
    // Stable sort keeps exact ties in the solver's index order.
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    const Vector& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return ev(a) > ev(b); });

    out.eigenvalues.resize(p);
    out.eigenvectors.resize(p, p);
    for (Index c = 0; c < p; ++c) {
        const Index src = order[static_cast<std::size_t>(c)];
        out.eigenvalues(c) = ev(src);
        Vector v = solver.eigenvectors().col(src);
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < p; ++i) {
            if (std::abs(v(i)) > best) {
                best = std::abs(v(i));
                arg = i;
            }
        }
        if (v(arg) < 0.0) v = -v;
        out.eigenvectors.col(c) = v;
    }
    return out;
}

double min_eigenvalue(const SymMatrix& s) {
    if (!s.all_finite()) throw NonFiniteError("min_eigenvalue: non-finite entries");
    if (s.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

bool is_positive_definite(const SymMatrix& s) {
    if (s.dim() == 0 || !s.all_finite()) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();
    return ev(0) > kPdTolerance * ev(ev.size() - 1) && ev(0) > 0.0;
}

double norm_spectral(const Matrix& a) {
    if (!a.allFinite()) throw NonFiniteError("norm_spectral: non-finite entries");
    if (a.size() == 0) return 0.0;
    if (a.rows() == a.cols() && a == a.transpose()) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
        const Vector& ev = solver.eigenvalues();
        return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    }
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double norm_frobenius(const Matrix& a) {
    if (!a.allFinite()) throw NonFiniteError("norm_frobenius: non-finite entries");
    return a.norm();
}

double norm_l1(const Matrix& a) {
    if (!a.allFinite()) throw NonFiniteError("norm_l1: non-finite entries");
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

double norm_max(const Matrix& a) {
    if (!a.allFinite()) throw NonFiniteError("norm_max: non-finite entries");
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().maxCoeff();
}

SymMatrix inv_sqrt(const SymMatrix& s) {
    const SymmetricSpectrum sp = eigh(s);
    const Index p = sp.dim();
    if (p == 0) return s;
    const double lmax = sp.eigenvalues(0);
    const double lmin = sp.eigenvalues(p - 1);
    if (!(lmin > 0.0) || lmin <= kPdTolerance * lmax) {
        throw SingularMatrixError("inv_sqrt: matrix is not positive definite", lmin);
    }
    const Vector scale = sp.eigenvalues.array().rsqrt();
    return SymMatrix(Matrix(sp.eigenvectors * scale.asDiagonal() * sp.eigenvectors.transpose()));
}

double weighted_quadratic_norm_with(const SymMatrix& estimate, const SymMatrix& w) {
    const Index p = estimate.dim();
    if (w.dim() != p) throw std::invalid_argument("weighted_quadratic_norm: dimension mismatch");
    if (p == 0) return 0.0;
    Matrix rel = w.matrix() * estimate.matrix() * w.matrix();
    rel.diagonal().array() -= 1.0;
    return rel.norm() / std::sqrt(static_cast<double>(p));
}

double weighted_quadratic_norm(const SymMatrix& estimate, const SymMatrix& sigma_true) {
    if (estimate.dim() != sigma_true.dim()) {
        throw std::invalid_argument("weighted_quadratic_norm: dimension mismatch");
    }
    return weighted_quadratic_norm_with(estimate, inv_sqrt(sigma_true));
}

double relative_spectral_error_with(const SymMatrix& estimate, const SymMatrix& w) {
    if (w.dim() != estimate.dim()) {
        throw std::invalid_argument("relative_spectral_error: dimension mismatch");
    }
    Matrix rel = w.matrix() * estimate.matrix() * w.matrix();
    rel.diagonal().array() -= 1.0;
    return norm_spectral(SymMatrix(std::move(rel)));
}

SymMatrix spd_inverse(const SymMatrix& s) {
    if (!s.all_finite()) throw NonFiniteError("spd_inverse: non-finite entries");
    const Index p = s.dim();
    Eigen::LLT<Matrix> llt(s.matrix());
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("spd_inverse: Cholesky factorization failed", min_eigenvalue(s));
    }
    // rcond is an L1 estimate; confirm with the spectrum before rejecting.
    if (llt.rcond() <= 1e2 * kPdTolerance && !is_positive_definite(s)) {
        throw SingularMatrixError("spd_inverse: matrix is numerically singular", min_eigenvalue(s));
    }
    return SymMatrix(Matrix(llt.solve(Matrix::Identity(p, p))));
}

}  // namespace poet
