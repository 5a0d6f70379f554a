#include "poet/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "poet/rng.hpp"

namespace poet {

namespace {

ThresholdSpec family_for(ThresholdStyle style, Index p, Index T) {
    ThresholdSpec f;
    f.style = style;
    f.omega = omega(p, T);
    return f;
}

Matrix select_columns(const Matrix& u, const std::vector<Index>& cols) {
    Matrix out(u.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = u.col(cols[k]);
    return out;
}

// Uniform draw in [0, n) from the raw engine output; mt19937_64 is fully
// specified, so splits do not depend on the standard library.
Index uniform_index(Engine& rng, Index n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return static_cast<Index>(x % range);
}

}  // namespace

SymMatrix thresholded_at(const ResidualMoments& moments, const ThresholdSpec& family,
                         const ShrinkageRule& rule, double C) {
    ThresholdSpec spec = family;
    spec.C = C;
    const Matrix tau = build_tau(spec, moments.sigma, &moments.theta);
    return threshold_covariance(moments.sigma, tau, rule);
}

std::vector<EigenCurvePoint> min_eigenvalue_curve(const ResidualMoments& moments,
                                                  const ThresholdSpec& family,
                                                  const ShrinkageRule& rule,
                                                  const std::vector<double>& grid) {
    std::vector<EigenCurvePoint> out(grid.size());
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const double C = grid[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = {
            C, min_eigenvalue(thresholded_at(moments, family, rule, C))};
    }
    return out;
}

std::vector<EigenCurvePoint> min_eigenvalue_curve(const Matrix& u_hat, const ShrinkageRule& rule,
                                                  const std::vector<double>& grid,
                                                  ThresholdStyle style) {
    const ResidualMoments m = residual_moments(u_hat);
    return min_eigenvalue_curve(m, family_for(style, u_hat.rows(), u_hat.cols()), rule, grid);
}

double diagonalizing_constant(const ResidualMoments& moments, const ThresholdSpec& family,
                              const ShrinkageRule& rule) {
    if (is_diagonal(thresholded_at(moments, family, rule, 0.0))) return 0.0;
    double C = 1.0;
    for (int step = 0; step < 60; ++step, C *= 2.0) {
        if (is_diagonal(thresholded_at(moments, family, rule, C))) return C;
    }
    throw std::invalid_argument(
        "diagonalizing_constant: no finite C removes every off-diagonal entry "
        "(some theta_ij is zero while sigma_ij is not)");
}

CminSearch c_min_search(const ResidualMoments& moments, const ThresholdSpec& family,
                        const ShrinkageRule& rule, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("c_min: resolution must be positive");
    const Vector d = moments.sigma.diag();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0)) {
            throw std::invalid_argument("c_min: residual variance of asset " + std::to_string(i) +
                                        " is not positive");
        }
    }
    CminSearch out;
    out.M = diagonalizing_constant(moments, family, rule);
    if (out.M == 0.0) {
        out.curve = {{0.0, d.minCoeff()}};
        return out;
    }
    std::vector<double> grid(static_cast<std::size_t>(kCminGridPoints));
    for (Index k = 0; k < kCminGridPoints; ++k) {
        grid[static_cast<std::size_t>(k)] =
            out.M * static_cast<double>(k) / static_cast<double>(kCminGridPoints - 1);
    }
    grid.back() = out.M;
    out.curve = min_eigenvalue_curve(moments, family, rule, grid);

    auto pd = [&](double C) {
        return is_positive_definite(thresholded_at(moments, family, rule, C));
    };
    std::ptrdiff_t last_bad = -1;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!pd(grid[k])) last_bad = static_cast<std::ptrdiff_t>(k);
    }
    if (last_bad < 0) {
        out.C_min = 0.0;
        return out;
    }
    double lo = grid[static_cast<std::size_t>(last_bad)];
    double hi = grid[static_cast<std::size_t>(last_bad) + 1];
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        if (pd(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.C_min = hi;
    return out;
}

double c_min(const ResidualMoments& moments, const ThresholdSpec& family,
             const ShrinkageRule& rule, double resolution) {
    return c_min_search(moments, family, rule, resolution).C_min;
}

double c_min(const Matrix& u_hat, const ShrinkageRule& rule, double resolution,
             ThresholdStyle style) {
    const ResidualMoments m = residual_moments(u_hat);
    return c_min(m, family_for(style, u_hat.rows(), u_hat.cols()), rule, resolution);
}

void CvConfig::validate() const {
    if (H < 1) throw std::invalid_argument("CvConfig: H must be >= 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("CvConfig: epsilon must be >= 0");
    if (grid) {
        if (grid->empty()) throw std::invalid_argument("CvConfig: grid is empty");
        for (std::size_t k = 0; k < grid->size(); ++k) {
            if (!std::isfinite((*grid)[k]) || (*grid)[k] < 0.0) {
                throw std::invalid_argument("CvConfig: grid values must be finite and >= 0");
            }
            if (k > 0 && !((*grid)[k] > (*grid)[k - 1])) {
                throw std::invalid_argument("CvConfig: grid must be strictly increasing");
            }
        }
    } else if (grid_points < 1) {
        throw std::invalid_argument("CvConfig: grid_points must be >= 1");
    }
}

Index cv_train_size(Index T) {
    if (T < 4) throw std::invalid_argument("cv_train_size: need T >= 4");
    const double t = static_cast<double>(T);
    const auto n = static_cast<Index>(std::llround(t * (1.0 - 1.0 / std::log(t))));
    return std::clamp<Index>(n, 2, T - 2);
}

std::vector<CvSplit> make_cv_splits(Index T, const CvConfig& cfg) {
    cfg.validate();
    const Index t1 = cv_train_size(T);
    const Index t2 = T - t1;
    std::vector<CvSplit> splits(static_cast<std::size_t>(cfg.H));
    for (Index h = 0; h < cfg.H; ++h) {
        Engine rng = make_engine(cfg.seed, static_cast<std::uint64_t>(h));
        CvSplit& s = splits[static_cast<std::size_t>(h)];
        if (cfg.split == SplitScheme::contiguous_block) {
            const Index start = uniform_index(rng, t1 + 1);
            for (Index t = 0; t < T; ++t) {
                (t >= start && t < start + t2 ? s.validation : s.train).push_back(t);
            }
        } else {
            std::vector<Index> perm(static_cast<std::size_t>(T));
            for (Index t = 0; t < T; ++t) perm[static_cast<std::size_t>(t)] = t;
            for (Index i = T - 1; i > 0; --i) {
                std::swap(perm[static_cast<std::size_t>(i)],
                          perm[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
            }
            s.train.assign(perm.begin(), perm.begin() + t1);
            s.validation.assign(perm.begin() + t1, perm.end());
            std::sort(s.train.begin(), s.train.end());
            std::sort(s.validation.begin(), s.validation.end());
        }
    }
    return splits;
}

std::vector<double> cv_split_scores(const Matrix& u_hat, const CvSplit& split,
                                    const ShrinkageRule& rule, ThresholdStyle style,
                                    const std::vector<double>& grid) {
    const Matrix train = select_columns(u_hat, split.train);
    const Matrix val = select_columns(u_hat, split.validation);
    const ResidualMoments m = residual_moments(train);
    const ThresholdSpec family = family_for(style, u_hat.rows(), train.cols());
    Matrix target = Matrix::Zero(u_hat.rows(), u_hat.rows());
    target.selfadjointView<Eigen::Lower>().rankUpdate(val, 1.0 / static_cast<double>(val.cols()));
    target = target.selfadjointView<Eigen::Lower>();

    std::vector<double> out;
    out.reserve(grid.size());
    for (double C : grid) {
        const SymMatrix thr = thresholded_at(m, family, rule, C);
        out.push_back((thr.matrix() - target).squaredNorm());
    }
    return out;
}

CvResult cross_validate_c(const Matrix& u_hat, const ShrinkageRule& rule, const CvConfig& cfg) {
    cfg.validate();
    rule.validate();
    const Index p = u_hat.rows();
    const Index T = u_hat.cols();
    if (T < 4) throw std::invalid_argument("cross_validate_c: need T >= 4");

    const ResidualMoments full = residual_moments(u_hat);
    const ThresholdSpec family = family_for(cfg.style, p, T);
    const CminSearch search = c_min_search(full, family, rule);

    CvResult result;
    result.C_min = search.C_min;
    result.M = search.M;
    const double lower = search.C_min + cfg.epsilon;

    std::vector<double> grid;
    if (cfg.grid) {
        for (double C : *cfg.grid) {
            if (C >= lower) grid.push_back(C);
        }
    } else if (lower < search.M) {
        const Index n = cfg.grid_points;
        for (Index k = 0; k < n; ++k) {
            grid.push_back(n == 1 ? lower
                                  : lower + (search.M - lower) * static_cast<double>(k) /
                                                static_cast<double>(n - 1));
        }
        grid.back() = std::max(grid.back(), lower);
    }
    if (grid.empty()) {
        throw std::invalid_argument("cross_validate_c: no grid point at or above C_min + epsilon = " +
                                    std::to_string(lower) + " (M = " + std::to_string(search.M) +
                                    "); supply a grid reaching larger C");
    }

    const std::vector<CvSplit> splits = make_cv_splits(T, cfg);
    const auto H = static_cast<std::ptrdiff_t>(splits.size());
    std::vector<std::vector<double>> scores(splits.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t h = 0; h < H; ++h) {
        scores[static_cast<std::size_t>(h)] =
            cv_split_scores(u_hat, splits[static_cast<std::size_t>(h)], rule, cfg.style, grid);
    }

    std::ptrdiff_t best = -1;
    result.curve.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sum = 0.0;
        for (const auto& s : scores) sum += s[g];
        result.curve[g] = {grid[g], sum / static_cast<double>(splits.size())};
        const bool admissible =
            is_positive_definite(thresholded_at(full, family, rule, grid[g]));
        if (admissible &&
            (best < 0 || result.curve[g].score < result.curve[static_cast<std::size_t>(best)].score)) {
            best = static_cast<std::ptrdiff_t>(g);
        }
    }
    if (best < 0) {
        throw std::invalid_argument(
            "cross_validate_c: the thresholded covariance is not positive definite at any grid "
            "point; supply a grid reaching larger C");
    }
    result.C_star = grid[static_cast<std::size_t>(best)];
    return result;
}

}  // namespace poet
