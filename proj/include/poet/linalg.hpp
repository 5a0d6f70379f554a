#pragma once

#include <Eigen/Dense>

namespace poet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative floor below which a symmetric matrix is not treated as positive
/// definite: lambda_min must exceed kPdTolerance * lambda_max.
inline constexpr double kPdTolerance = 1e-10;

/// Square symmetric matrix. The stored entries satisfy a(i,j) == a(j,i)
/// bitwise; construction from a general matrix averages it with its transpose,
/// which leaves already-symmetric input unchanged.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& a);
    explicit SymMatrix(Matrix&& a);

    static SymMatrix identity(Index p) { return SymMatrix(Matrix::Identity(p, p)); }
    static SymMatrix zero(Index p) { return SymMatrix(Matrix::Zero(p, p)); }
    static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

    Index dim() const noexcept { return m_.rows(); }
    double operator()(Index i, Index j) const { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }
    Vector diag() const { return m_.diagonal(); }
    bool all_finite() const { return m_.allFinite(); }

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
    friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
    friend SymMatrix operator*(double s, const SymMatrix& a);

private:
    void symmetrize();
    Matrix m_;
};

/// Full spectrum sorted descending. Each eigenvector column has its
/// largest-magnitude component positive (first such index on ties).
struct SymmetricSpectrum {
    Vector eigenvalues;
    Matrix eigenvectors;

    Index dim() const noexcept { return eigenvalues.size(); }
    /// sum_{i < k} lambda_i v_i v_i'
    Matrix leading_part(Index k) const;
};

/// Throws NonFiniteError if any entry is NaN or infinite.
SymmetricSpectrum eigh(const SymMatrix& s);

double min_eigenvalue(const SymMatrix& s);
bool is_positive_definite(const SymMatrix& s);

double norm_spectral(const Matrix& a);
double norm_frobenius(const Matrix& a);
double norm_l1(const Matrix& a);
double norm_max(const Matrix& a);

inline double norm_spectral(const SymMatrix& a) { return norm_spectral(a.matrix()); }
inline double norm_frobenius(const SymMatrix& a) { return norm_frobenius(a.matrix()); }
inline double norm_l1(const SymMatrix& a) { return norm_l1(a.matrix()); }
inline double norm_max(const SymMatrix& a) { return norm_max(a.matrix()); }

/// V diag(lambda^{-1/2}) V'. Throws SingularMatrixError when s is not
/// positive definite under kPdTolerance.
SymMatrix inv_sqrt(const SymMatrix& s);

/// p^{-1/2} || Sigma^{-1/2} (A - Sigma) Sigma^{-1/2} ||_F
double weighted_quadratic_norm(const SymMatrix& estimate, const SymMatrix& sigma_true);

/// Same norm with a precomputed Sigma^{-1/2}, for repeated evaluation
/// against a fixed truth.
double weighted_quadratic_norm_with(const SymMatrix& estimate,
                                    const SymMatrix& sigma_inv_sqrt);

/// || W A W - I || in spectral norm, W = Sigma^{-1/2}.
double relative_spectral_error_with(const SymMatrix& estimate,
                                    const SymMatrix& sigma_inv_sqrt);

/// Inverse through Cholesky. Throws SingularMatrixError when s is not
/// positive definite under kPdTolerance.
SymMatrix spd_inverse(const SymMatrix& s);

}  // namespace poet
