#include <gridtid/recovery.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gridtid {

namespace {

constexpr double kRelTol = 1e-8;

double kkt_tolerance(const Eigen::VectorXd& linear) {
    const double rinf = linear.size() ? linear.cwiseAbs().maxCoeff() : 0.0;
    return kRelTol * (1.0 + rinf);
}

double objective_value(const BoxQp& qp, const Eigen::VectorXd& x) {
    return 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
}

} // namespace

PartitionedPrecision partition_matrix(const Eigen::MatrixXd& precision,
                                      std::vector<int> missing_idx) {
    const int n = static_cast<int>(precision.rows());
    std::sort(missing_idx.begin(), missing_idx.end());
    if (std::adjacent_find(missing_idx.begin(), missing_idx.end()) != missing_idx.end())
        throw ValidationError("partition: duplicate missing index");
    for (int i : missing_idx)
        if (i < 0 || i >= n) throw ValidationError("partition: index out of range");
    const int l = static_cast<int>(missing_idx.size());
    if (l == 0) throw NoSignalsMissing("partition: nothing missing; classify directly");
    if (l == n) throw AllSignalsMissing("partition: all signals missing; cannot recover");

    PartitionedPrecision p;
    p.missing_idx = std::move(missing_idx);
    p.available_idx.reserve(static_cast<std::size_t>(n - l));
    for (int i = 0; i < n; ++i)
        if (!std::binary_search(p.missing_idx.begin(), p.missing_idx.end(), i))
            p.available_idx.push_back(i);
    const int q = n - l;

    p.psi_uu.resize(l, l);
    p.psi_uv.resize(l, q);
    p.psi_vu.resize(q, l);
    p.psi_vv.resize(q, q);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) p.psi_uu(i, j) = precision(p.missing_idx[i], p.missing_idx[j]);
        for (int j = 0; j < q; ++j) p.psi_uv(i, j) = precision(p.missing_idx[i], p.available_idx[j]);
    }
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < l; ++j) p.psi_vu(i, j) = precision(p.available_idx[i], p.missing_idx[j]);
        for (int j = 0; j < q; ++j)
            p.psi_vv(i, j) = precision(p.available_idx[i], p.available_idx[j]);
    }
    return p;
}

PartitionedPrecision partition_precision(const DaModel& model, int k,
                                         std::vector<int> missing_idx) {
    if (k < 0 || k >= model.num_classes()) throw ValidationError("partition: bad class index");
    return partition_matrix(model.class_stats(k).precision, std::move(missing_idx));
}

BoxQp recovery_coefficients(const PartitionedPrecision& p, const Eigen::VectorXd& x_avail,
                            const Eigen::VectorXd& mean, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper) {
    const int l = static_cast<int>(p.missing_idx.size());
    const int q = static_cast<int>(p.available_idx.size());
    if (x_avail.size() != q) throw ValidationError("coefficients: available vector length");
    if (!x_avail.allFinite()) throw ValidationError("coefficients: available values must be finite");
    if (lower.size() != l || upper.size() != l)
        throw ValidationError("coefficients: bounds length");
    if ((lower.array() > upper.array()).any())
        throw ValidationError("coefficients: lower bound exceeds upper bound");

    Eigen::VectorXd m_u(l), m_v(q);
    for (int i = 0; i < l; ++i) m_u[i] = mean[p.missing_idx[i]];
    for (int i = 0; i < q; ++i) m_v[i] = mean[p.available_idx[i]];

    BoxQp qp;
    qp.hessian = p.psi_uu;
    // Column form of the printed row-vector definition; collapses to
    // Psi_uv (x_v - m_v) - Psi_uu m_u when the precision is symmetric.
    qp.linear = 0.5 * ((p.psi_uv + p.psi_vu.transpose()) * (x_avail - m_v) -
                       (p.psi_uu + p.psi_uu.transpose()) * m_u);
    qp.lower = lower;
    qp.upper = upper;
    return qp;
}

bool kkt_satisfied(const BoxQp& qp, const Eigen::VectorXd& x) {
    const double tol = kkt_tolerance(qp.linear);
    const Eigen::VectorXd g = qp.hessian * x + qp.linear;
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] < qp.lower[i] || x[i] > qp.upper[i]) return false;
        const bool at_lo = x[i] == qp.lower[i];
        const bool at_hi = x[i] == qp.upper[i];
        if (at_lo && at_hi) continue; // pinned coordinate, multiplier free
        if (at_lo) {
            if (g[i] < -tol) return false;
        } else if (at_hi) {
            if (g[i] > tol) return false;
        } else {
            if (std::abs(g[i]) > tol) return false;
        }
    }
    return true;
}

// Primal active-set iteration. The working set holds coordinates fixed
// at a bound; each pass solves the equality-constrained problem on the
// free coordinates, either steps to the first blocking bound or, at an
// EQP optimum, releases the bound with the worst multiplier sign.
BoxQpSolution solve_box_qp(const BoxQp& qp) {
    const int l = static_cast<int>(qp.hessian.rows());
    if (qp.linear.size() != l || qp.lower.size() != l || qp.upper.size() != l)
        throw ValidationError("box qp: inconsistent dimensions");
    if ((qp.lower.array() > qp.upper.array()).any())
        throw ValidationError("box qp: lower bound exceeds upper bound");

    BoxQpSolution sol;
    sol.status.assign(static_cast<std::size_t>(l), BoundStatus::free);
    sol.x = Eigen::VectorXd::Zero(l);

    // Pinned coordinates (lower == upper) are eliminated up front.
    std::vector<int> active_dims;
    for (int i = 0; i < l; ++i) {
        if (qp.lower[i] == qp.upper[i]) {
            sol.status[static_cast<std::size_t>(i)] = BoundStatus::pinned;
            sol.x[i] = qp.lower[i];
        } else {
            active_dims.push_back(i);
        }
    }
    const int m = static_cast<int>(active_dims.size());
    if (m == 0) {
        sol.objective = objective_value(qp, sol.x);
        return sol;
    }

    Eigen::MatrixXd H(m, m);
    Eigen::VectorXd r(m), lo(m), hi(m);
    for (int a = 0; a < m; ++a) {
        const int i = active_dims[static_cast<std::size_t>(a)];
        r[a] = qp.linear[i];
        lo[a] = qp.lower[i];
        hi[a] = qp.upper[i];
        for (int b = 0; b < m; ++b) H(a, b) = qp.hessian(active_dims[static_cast<std::size_t>(a)],
                                                         active_dims[static_cast<std::size_t>(b)]);
        for (int i2 = 0; i2 < l; ++i2)
            if (sol.status[static_cast<std::size_t>(i2)] == BoundStatus::pinned)
                r[a] += qp.hessian(i, i2) * sol.x[i2];
    }

    Eigen::LLT<Eigen::MatrixXd> llt_full(H);
    if (llt_full.info() != Eigen::Success)
        throw NonPositiveDefinite("box qp: hessian is not positive definite");

    const double tol = kkt_tolerance(qp.linear);

    // Working set: -1 free, 0 at lower, 1 at upper.
    std::vector<int> side(static_cast<std::size_t>(m), -1);
    Eigen::VectorXd x = llt_full.solve(-r);
    for (int a = 0; a < m; ++a) {
        if (x[a] <= lo[a]) {
            x[a] = lo[a];
            side[static_cast<std::size_t>(a)] = 0;
        } else if (x[a] >= hi[a]) {
            x[a] = hi[a];
            side[static_cast<std::size_t>(a)] = 1;
        }
    }

    const int max_iter = 10 * l;
    bool converged = false;
    int it = 0;
    for (; it < max_iter && !converged; ++it) {
        std::vector<int> free_set;
        for (int a = 0; a < m; ++a)
            if (side[static_cast<std::size_t>(a)] < 0) free_set.push_back(a);
        const int f = static_cast<int>(free_set.size());

        // EQP candidate with the working set held at its bounds.
        Eigen::VectorXd y = x;
        if (f > 0) {
            Eigen::MatrixXd Hff(f, f);
            Eigen::VectorXd rhs(f);
            for (int a = 0; a < f; ++a) {
                rhs[a] = -r[free_set[static_cast<std::size_t>(a)]];
                for (int b = 0; b < f; ++b)
                    Hff(a, b) = H(free_set[static_cast<std::size_t>(a)],
                                  free_set[static_cast<std::size_t>(b)]);
                for (int b = 0; b < m; ++b)
                    if (side[static_cast<std::size_t>(b)] >= 0)
                        rhs[a] -= H(free_set[static_cast<std::size_t>(a)], b) * x[b];
            }
            Eigen::LLT<Eigen::MatrixXd> llt(Hff);
            if (llt.info() != Eigen::Success)
                throw NonPositiveDefinite("box qp: free-block factorization failed");
            const Eigen::VectorXd xf = llt.solve(rhs);
            for (int a = 0; a < f; ++a) y[free_set[static_cast<std::size_t>(a)]] = xf[a];
        }

        bool feasible = true;
        for (int a = 0; a < f; ++a) {
            const int c = free_set[static_cast<std::size_t>(a)];
            if (y[c] < lo[c] || y[c] > hi[c]) feasible = false;
        }

        if (feasible) {
            x = y;
            // Multiplier signs on the working set; release the worst one.
            const Eigen::VectorXd g = H * x + r;
            int worst = -1;
            double worst_violation = tol;
            for (int a = 0; a < m; ++a) {
                const int s = side[static_cast<std::size_t>(a)];
                if (s < 0) continue;
                const double violation = s == 0 ? -g[a] : g[a];
                if (violation > worst_violation) {
                    worst_violation = violation;
                    worst = a;
                }
            }
            if (worst < 0) {
                converged = true;
            } else {
                side[static_cast<std::size_t>(worst)] = -1;
            }
        } else {
            // Step from x toward y until the first bound blocks.
            double alpha = 1.0;
            for (int a = 0; a < f; ++a) {
                const int c = free_set[static_cast<std::size_t>(a)];
                const double p = y[c] - x[c];
                if (p > 0 && y[c] > hi[c]) alpha = std::min(alpha, (hi[c] - x[c]) / p);
                else if (p < 0 && y[c] < lo[c]) alpha = std::min(alpha, (lo[c] - x[c]) / p);
            }
            for (int a = 0; a < f; ++a) {
                const int c = free_set[static_cast<std::size_t>(a)];
                x[c] += alpha * (y[c] - x[c]);
                if (x[c] <= lo[c]) {
                    x[c] = lo[c];
                    side[static_cast<std::size_t>(c)] = 0;
                } else if (x[c] >= hi[c]) {
                    x[c] = hi[c];
                    side[static_cast<std::size_t>(c)] = 1;
                }
            }
        }
    }

    sol.iterations = it;
    for (int a = 0; a < m; ++a) {
        const int i = active_dims[static_cast<std::size_t>(a)];
        sol.x[i] = x[a];
        const int s = side[static_cast<std::size_t>(a)];
        sol.status[static_cast<std::size_t>(i)] =
            s == 0 ? BoundStatus::at_lower : (s == 1 ? BoundStatus::at_upper : BoundStatus::free);
    }
    if (!converged || !kkt_satisfied(qp, sol.x))
        throw NoConvergence("box qp: KKT certificate not reached in " +
                            std::to_string(max_iter) + " iterations");
    sol.objective = objective_value(qp, sol.x);
    return sol;
}

RecoveryResult recover(const DaModel& model, const Observation& x,
                       const std::optional<SignalRanges>& override_bounds) {
    validate_observation(x, model.schema());
    const int n = model.dimension();
    const std::vector<int> missing = x.missing_indices();
    const int l = static_cast<int>(missing.size());
    if (l == 0) throw NoSignalsMissing("recover: observation is complete; classify directly");
    if (l == n) throw AllSignalsMissing("recover: every signal is missing");

    const SignalRanges& ranges = override_bounds ? *override_bounds : model.signal_ranges();
    if (ranges.min.size() != n || ranges.max.size() != n)
        throw ValidationError("recover: bounds length does not match schema");
    if ((ranges.min.array() > ranges.max.array()).any())
        throw ValidationError("recover: bounds must satisfy min <= max");

    const auto& st = model.standardization();
    Eigen::VectorXd z_avail(n - l);
    {
        int j = 0;
        for (int i = 0; i < n; ++i)
            if (x.available[static_cast<std::size_t>(i)])
                z_avail[j++] = (x.values[i] - st.shift[i]) / st.scale[i];
    }
    Eigen::VectorXd z_lo(l), z_hi(l);
    for (int i = 0; i < l; ++i) {
        const int c = missing[static_cast<std::size_t>(i)];
        z_lo[i] = (ranges.min[c] - st.shift[c]) / st.scale[c];
        z_hi[i] = (ranges.max[c] - st.shift[c]) / st.scale[c];
    }

    RecoveryResult result;
    result.missing_idx = missing;
    result.per_class.reserve(static_cast<std::size_t>(model.num_classes()));

    for (int k = 0; k < model.num_classes(); ++k) {
        const auto& cs = model.class_stats(k);
        const PartitionedPrecision part = partition_matrix(cs.precision, missing);
        const BoxQp qp = recovery_coefficients(part, z_avail, cs.mean, z_lo, z_hi);
        BoxQpSolution qp_sol;
        try {
            qp_sol = solve_box_qp(qp);
        } catch (const NumericalError& e) {
            throw NoConvergence("recover: class " + cs.label.str() + ": " + e.what());
        }

        Eigen::VectorXd z_full(n);
        {
            int ja = 0, jm = 0;
            for (int i = 0; i < n; ++i) {
                if (x.available[static_cast<std::size_t>(i)]) z_full[i] = z_avail[ja++];
                else z_full[i] = qp_sol.x[jm++];
            }
        }

        ClassRecovery cr;
        cr.class_index = k;
        cr.objective = qp_sol.objective;
        cr.score = model.score_z(k, z_full);
        cr.recovered.resize(l);
        for (int i = 0; i < l; ++i) {
            const int c = missing[static_cast<std::size_t>(i)];
            double raw = st.shift[c] + st.scale[c] * qp_sol.x[i];
            // Destandardization can drift past the raw bound by an ulp.
            raw = std::clamp(raw, ranges.min[c], ranges.max[c]);
            cr.recovered[i] = raw;
        }
        result.per_class.push_back(std::move(cr));
    }

    int best = 0;
    for (int k = 1; k < model.num_classes(); ++k)
        if (result.per_class[static_cast<std::size_t>(k)].score >
            result.per_class[static_cast<std::size_t>(best)].score)
            best = k;
    result.best_class = best;

    result.recovered_observation = x;
    for (int i = 0; i < l; ++i) {
        const int c = missing[static_cast<std::size_t>(i)];
        result.recovered_observation.values[c] =
            result.per_class[static_cast<std::size_t>(best)].recovered[i];
        result.recovered_observation.available[static_cast<std::size_t>(c)] = true;
    }
    return result;
}

} // namespace gridtid
