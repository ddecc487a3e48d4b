#pragma once

// Independent reference implementations used to check the library.
// Everything here is deliberately written the slow, direct way
// (explicit inverses, determinants, exhaustive enumeration) so the
// production code path is verified against an unrelated route.

#include <gridtid/model.hpp>
#include <gridtid/recovery.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

// Gaussian log density via the textbook formula with an explicit
// matrix inverse and determinant.
inline double naive_log_density(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                const Eigen::VectorXd& x) {
    const auto n = static_cast<double>(x.size());
    const Eigen::VectorXd d = x - mean;
    const double quad = d.dot(cov.inverse() * d);
    const double density = std::exp(-0.5 * quad) /
                           std::sqrt(std::pow(2.0 * std::numbers::pi, n) * cov.determinant());
    return std::log(density);
}

// Bayes posterior by exponentiating densities directly.
inline Eigen::VectorXd naive_posterior(const std::vector<Eigen::VectorXd>& means,
                                       const std::vector<Eigen::MatrixXd>& covs,
                                       const Eigen::VectorXd& priors, const Eigen::VectorXd& x) {
    Eigen::VectorXd joint(priors.size());
    for (Eigen::Index k = 0; k < priors.size(); ++k)
        joint[k] = std::exp(naive_log_density(means[static_cast<std::size_t>(k)],
                                              covs[static_cast<std::size_t>(k)], x)) *
                   priors[k];
    return joint / joint.sum();
}

// Precision partition through an explicit permutation-matrix conjugation.
struct PermutedBlocks {
    Eigen::MatrixXd uu, uv, vu, vv;
};

inline PermutedBlocks permutation_partition(const Eigen::MatrixXd& psi,
                                            const std::vector<int>& missing,
                                            const std::vector<int>& available) {
    const int n = static_cast<int>(psi.rows());
    const int l = static_cast<int>(missing.size());
    Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(n, n);
    int r = 0;
    for (int i : missing) perm(r++, i) = 1.0;
    for (int i : available) perm(r++, i) = 1.0;
    const Eigen::MatrixXd rephrased = perm * psi * perm.transpose();
    PermutedBlocks b;
    b.uu = rephrased.topLeftCorner(l, l);
    b.uv = rephrased.topRightCorner(l, n - l);
    b.vu = rephrased.bottomLeftCorner(n - l, l);
    b.vv = rephrased.bottomRightCorner(n - l, n - l);
    return b;
}

// Full rephrased quadratic form 0.5*([Xu,Xv]-M)' Psi ([Xu,Xv]-M) with the
// observation assembled from its parts; the QP objective must differ from
// this only by a constant in Xu.
inline double full_quadratic_form(const Eigen::MatrixXd& psi, const Eigen::VectorXd& mean,
                                  const std::vector<int>& missing,
                                  const std::vector<int>& available, const Eigen::VectorXd& xu,
                                  const Eigen::VectorXd& xv) {
    Eigen::VectorXd x(mean.size());
    for (std::size_t i = 0; i < missing.size(); ++i)
        x[missing[i]] = xu[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < available.size(); ++i)
        x[available[i]] = xv[static_cast<Eigen::Index>(i)];
    const Eigen::VectorXd d = x - mean;
    return 0.5 * d.dot(psi * d);
}

inline double box_qp_objective(const gridtid::BoxQp& qp, const Eigen::VectorXd& x) {
    return 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
}

// Exhaustive enumeration over all 3^l lower/upper/free assignments. For
// each assignment the free block is solved exactly and primal/dual
// feasibility checked; strict convexity makes the satisfying assignment
// unique up to boundary ties.
inline std::optional<Eigen::VectorXd> active_set_enumeration(const gridtid::BoxQp& qp,
                                                             double tol = 1e-9) {
    const int l = static_cast<int>(qp.hessian.rows());
    std::vector<int> state(static_cast<std::size_t>(l), 0); // 0 lower, 1 upper, 2 free
    const long total = static_cast<long>(std::pow(3.0, l));
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (int i = 0; i < l; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
        }
        bool skip = false;
        Eigen::VectorXd x(l);
        std::vector<int> free_idx;
        for (int i = 0; i < l; ++i) {
            const int s = state[static_cast<std::size_t>(i)];
            if (s == 0) x[i] = qp.lower[i];
            else if (s == 1) {
                if (!std::isfinite(qp.upper[i]) || qp.lower[i] == qp.upper[i]) skip = true;
                x[i] = qp.upper[i];
            } else {
                free_idx.push_back(i);
            }
            if (s == 0 && !std::isfinite(qp.lower[i])) skip = true;
        }
        if (skip) continue;

        const int f = static_cast<int>(free_idx.size());
        if (f > 0) {
            Eigen::MatrixXd hff(f, f);
            Eigen::VectorXd rhs(f);
            for (int a = 0; a < f; ++a) {
                rhs[a] = -qp.linear[free_idx[static_cast<std::size_t>(a)]];
                for (int b = 0; b < f; ++b)
                    hff(a, b) = qp.hessian(free_idx[static_cast<std::size_t>(a)],
                                           free_idx[static_cast<std::size_t>(b)]);
                for (int i = 0; i < l; ++i) {
                    if (state[static_cast<std::size_t>(i)] != 2)
                        rhs[a] -= qp.hessian(free_idx[static_cast<std::size_t>(a)], i) * x[i];
                }
            }
            const Eigen::VectorXd xf = hff.ldlt().solve(rhs);
            for (int a = 0; a < f; ++a) x[free_idx[static_cast<std::size_t>(a)]] = xf[a];
        }

        bool ok = true;
        const Eigen::VectorXd g = qp.hessian * x + qp.linear;
        for (int i = 0; i < l && ok; ++i) {
            switch (state[static_cast<std::size_t>(i)]) {
            case 0: ok = g[i] >= -tol; break;
            case 1: ok = g[i] <= tol; break;
            default: ok = x[i] >= qp.lower[i] - tol && x[i] <= qp.upper[i] + tol; break;
            }
        }
        if (ok) return x;
    }
    return std::nullopt;
}

// Coarse-to-fine grid search; valid for convex objectives.
inline Eigen::VectorXd grid_search(const gridtid::BoxQp& qp, int points_per_dim = 11,
                                   int refinements = 6) {
    const int l = static_cast<int>(qp.hessian.rows());
    Eigen::VectorXd lo = qp.lower, hi = qp.upper;
    Eigen::VectorXd best = 0.5 * (lo + hi);
    for (int round = 0; round < refinements; ++round) {
        std::vector<int> idx(static_cast<std::size_t>(l), 0);
        double best_obj = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_round = best;
        while (true) {
            Eigen::VectorXd x(l);
            for (int i = 0; i < l; ++i) {
                const double w = (points_per_dim == 1)
                                     ? 0.0
                                     : static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                                           (points_per_dim - 1);
                x[i] = lo[i] + w * (hi[i] - lo[i]);
            }
            const double obj = box_qp_objective(qp, x);
            if (obj < best_obj) {
                best_obj = obj;
                best_round = x;
            }
            int d = 0;
            while (d < l && ++idx[static_cast<std::size_t>(d)] == points_per_dim) {
                idx[static_cast<std::size_t>(d)] = 0;
                ++d;
            }
            if (d == l) break;
        }
        best = best_round;
        // Shrink the window around the incumbent.
        for (int i = 0; i < l; ++i) {
            const double half = (hi[i] - lo[i]) / (points_per_dim - 1);
            lo[i] = std::max(qp.lower[i], best[i] - half);
            hi[i] = std::min(qp.upper[i], best[i] + half);
        }
    }
    return best;
}

// Projected gradient descent with a conservative fixed step.
inline Eigen::VectorXd projected_gradient(const gridtid::BoxQp& qp, int max_iter = 200000,
                                          double tol = 1e-12) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qp.hessian);
    const double step = 1.0 / es.eigenvalues().maxCoeff();
    Eigen::VectorXd x = qp.lower.cwiseMax(qp.upper.cwiseMin(Eigen::VectorXd::Zero(qp.lower.size())));
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = qp.hessian * x + qp.linear;
        Eigen::VectorXd next = (x - step * g).cwiseMax(qp.lower).cwiseMin(qp.upper);
        const double delta = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (delta < tol) break;
    }
    return x;
}

// Gaussian conditional mean via the covariance-side Schur formula.
inline Eigen::VectorXd schur_conditional_mean(const Eigen::MatrixXd& cov,
                                              const Eigen::VectorXd& mean,
                                              const std::vector<int>& missing,
                                              const std::vector<int>& available,
                                              const Eigen::VectorXd& x_avail) {
    const int l = static_cast<int>(missing.size());
    const int q = static_cast<int>(available.size());
    Eigen::MatrixXd cov_uv(l, q), cov_vv(q, q);
    Eigen::VectorXd mu_u(l), mu_v(q);
    for (int i = 0; i < l; ++i) {
        mu_u[i] = mean[missing[static_cast<std::size_t>(i)]];
        for (int j = 0; j < q; ++j)
            cov_uv(i, j) = cov(missing[static_cast<std::size_t>(i)],
                               available[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < q; ++i) {
        mu_v[i] = mean[available[static_cast<std::size_t>(i)]];
        for (int j = 0; j < q; ++j)
            cov_vv(i, j) = cov(available[static_cast<std::size_t>(i)],
                               available[static_cast<std::size_t>(j)]);
    }
    return mu_u + cov_uv * cov_vv.ldlt().solve(x_avail - mu_v);
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double jitter = 0.5) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::MatrixXd m = a * a.transpose() / n + jitter * Eigen::MatrixXd::Identity(n, n);
    return ((m + m.transpose()) * 0.5).eval();
}

// Mean and standard deviation of a Gaussian truncated below at `floor`.
struct TruncatedMoments {
    double mean;
    double stddev;
};

inline TruncatedMoments truncated_normal_moments(double mu, double sigma, double floor) {
    const double alpha = (floor - mu) / sigma;
    const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi);
    const double z = 1.0 - 0.5 * std::erfc(-alpha / std::sqrt(2.0)); // Phi(alpha)
    const double tail = 1.0 - z;
    const double lambda = phi / tail;
    const double mean = mu + sigma * lambda;
    const double var = sigma * sigma * (1.0 + alpha * lambda - lambda * lambda);
    return {mean, std::sqrt(var)};
}

} // namespace oracle
