#pragma once

#include <vector>

#include "poet/linalg.hpp"
#include "poet/panel.hpp"

namespace poet {

/// Least-squares factor fit under T^{-1} F'F = I_K with Lambda'Lambda diagonal.
struct FactorFit {
    Index K = 0;
    Matrix F_hat;            // T x K, columns sqrt(T) x leading eigenvectors of Y'Y
    Matrix Lambda_hat;       // p x K, T^{-1} Y F_hat
    Matrix U_hat;            // p x T, Y - Lambda_hat F_hat'
    Vector top_eigenvalues;  // leading K eigenvalues of T^{-1} Y Y'

    /// Diagonal of the leading eigenvalues of T^{-1} Y'Y (same values as
    /// top_eigenvalues).
    Matrix V() const { return Matrix(top_eigenvalues.asDiagonal()); }

    /// Lambda_hat Lambda_hat'
    SymMatrix common_covariance() const;
};

/// Which Gram matrix carries the eigenproblem. `automatic` picks the smaller
/// of Y'Y (T x T) and YY' (p x p); both give the same fit.
enum class FactorRoute { automatic, time_gram, asset_gram };

/// Throws std::invalid_argument when K > min(p, T) or K < 0.
FactorFit estimate_factors(const ReturnPanel& panel, Index K,
                           FactorRoute route = FactorRoute::automatic);

enum class IcVariant { ic1, ic2 };

/// IC1: (p+T)/(pT) log(pT/(p+T)); IC2: (p+T)/(pT) log min(p, T).
double ic_penalty(Index T, Index p, IcVariant variant);

struct IcPoint {
    Index K = 0;
    double log_residual = 0.0;  // log((pT)^{-1} ||Y - T^{-1} Y F F'||_F^2)
    double penalty = 0.0;       // K g(T, p)
    double total = 0.0;
};

struct FactorSelection {
    Index K_hat = 0;
    std::vector<IcPoint> curve;  // K = 0..M
    /// Residuals vanish at K_hat: the panel has exact rank K_hat <= M.
    bool exact_low_rank = false;
};

inline constexpr Index kDefaultMaxFactors = 8;

/// argmin over K in [0, M] of the information criterion; ties go to the
/// smallest K. Requires M <= min(p, T) - 1.
FactorSelection select_num_factors(const ReturnPanel& panel, Index M = kDefaultMaxFactors,
                                   IcVariant variant = IcVariant::ic1);

}  // namespace poet
