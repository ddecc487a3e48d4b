#pragma once

#include <gridtid/model.hpp>

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gridtid {

// Blocks of a class precision matrix under the ordering
// [missing, available]. Pure index gathering; reassembly is exact.
struct PartitionedPrecision {
    std::vector<int> missing_idx;   // sorted, length l
    std::vector<int> available_idx; // sorted, length q
    Eigen::MatrixXd psi_uu;         // l x l
    Eigen::MatrixXd psi_uv;         // l x q
    Eigen::MatrixXd psi_vu;         // q x l
    Eigen::MatrixXd psi_vv;         // q x q
};

// minimize 0.5 x'Hx + r'x  subject to  lower <= x <= upper
struct BoxQp {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

enum class BoundStatus { free, at_lower, at_upper, pinned };

struct BoxQpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    std::vector<BoundStatus> status;
    int iterations = 0;
};

struct ClassRecovery {
    int class_index = 0;
    Eigen::VectorXd recovered; // raw units, over missing_idx
    double objective = 0.0;    // QP objective in standardized coordinates
    double score = 0.0;        // discriminant score with recovery substituted
};

struct RecoveryResult {
    std::vector<int> missing_idx;
    std::vector<ClassRecovery> per_class;
    int best_class = 0;
    Observation recovered_observation;
};

// Gathers the four precision blocks of class k for the given missing
// set. Throws AllSignalsMissing / NoSignalsMissing at the l = n / l = 0
// boundaries.
PartitionedPrecision partition_precision(const DaModel& model, int k,
                                         std::vector<int> missing_idx);

// Partition of an explicit precision matrix (no model required).
PartitionedPrecision partition_matrix(const Eigen::MatrixXd& precision,
                                      std::vector<int> missing_idx);

// Builds the per-class QP: hessian = psi_uu and the linear term
//   r = 0.5*((Psi_uv + Psi_vu')*(x_v - m_v) - (Psi_uu + Psi_uu')*m_u)
// with box bounds supplied by the caller (already in solver coordinates).
BoxQp recovery_coefficients(const PartitionedPrecision& p, const Eigen::VectorXd& x_avail,
                            const Eigen::VectorXd& mean, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper);

// Primal active-set solve of the strictly convex box QP. Starts from the
// clipped unconstrained minimizer, alternates free-subspace Cholesky
// solves with single bound additions/releases, and stops when the KKT
// sign pattern holds. Iteration cap 10*l; tolerance 1e-8*(1+|r|_inf).
BoxQpSolution solve_box_qp(const BoxQp& qp);

// KKT certificate used by both the solver and the test suites:
// free coordinates need |g| <= tol, lower-active g >= -tol,
// upper-active g <= tol, with tol = 1e-8*(1+|r|_inf).
bool kkt_satisfied(const BoxQp& qp, const Eigen::VectorXd& x);

// Full recovery: per-class partition/build/solve, score each class on
// its substituted observation, pick the best. Bounds default to the
// model's training signal ranges (raw units); override_bounds, when
// given, replaces them per predictor.
RecoveryResult recover(const DaModel& model, const Observation& x,
                       const std::optional<SignalRanges>& override_bounds = std::nullopt);

} // namespace gridtid
