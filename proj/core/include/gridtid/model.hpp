#pragma once

#include <gridtid/types.hpp>

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gridtid {

// Per-class Gaussian parameters in standardized (z-score) coordinates.
// precision and log_det_cov are derived from covariance via Cholesky and
// kept consistent with it.
struct ClassStats {
    TopologyLabel label;
    double prior = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd precision;
    double log_det_cov = 0.0;
};

struct LabeledObservation {
    Observation obs;
    TopologyLabel label;
};

struct ClassParams {
    TopologyLabel label;
    double prior = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct Standardization {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale; // strictly positive
};

struct SignalRanges {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
};

struct Classification {
    TopologyLabel label;
    int class_index = 0;
    Eigen::VectorXd posterior;
};

// Trained discriminant-analysis classifier. Immutable once built; all
// scoring entry points are const and safe to call concurrently.
class DaModel {
public:
    // Assembles a model from explicit parameters (deserialization and
    // synthetic test models). Computes precision/log-determinants and
    // enforces the class invariants.
    DaModel(PredictorSchema schema, Standardization standardization,
            SignalRanges signal_ranges, double lambda,
            std::vector<ClassParams> classes);

    const PredictorSchema& schema() const { return schema_; }
    int dimension() const { return schema_.dimension(); }
    int num_classes() const { return static_cast<int>(classes_.size()); }
    const std::vector<ClassStats>& classes() const { return classes_; }
    const ClassStats& class_stats(int k) const { return classes_.at(static_cast<std::size_t>(k)); }
    const Standardization& standardization() const { return standardization_; }
    const SignalRanges& signal_ranges() const { return signal_ranges_; }
    double lambda() const { return lambda_; }

    int class_index(const TopologyLabel& label) const; // -1 if absent
    std::vector<TopologyLabel> labels() const;

    // Class moments mapped back to raw measurement units.
    Eigen::VectorXd class_mean_raw(int k) const;
    Eigen::MatrixXd class_cov_raw(int k) const;

    Eigen::VectorXd standardize(const Eigen::VectorXd& raw) const;
    Eigen::VectorXd destandardize(const Eigen::VectorXd& z) const;

    // log f_k(z(x)): Gaussian log density of the standardized observation.
    double log_density(int k, const Observation& x) const;

    // delta_k(x) = -0.5 (z-M)' Psi (z-M) - 0.5 log|Sigma| + log rho.
    double discriminant_score(int k, const Observation& x) const;

    // Bayes posterior over classes, computed through log-sum-exp.
    Eigen::VectorXd posterior(const Observation& x) const;

    // Largest-score class; exact ties go to the lowest class index.
    Classification classify(const Observation& x) const;

    // Scoring on already-standardized coordinates; recovery and the
    // evaluation sweeps use these to avoid re-validating per class.
    double score_z(int k, const Eigen::VectorXd& z) const;
    Eigen::VectorXd posterior_z(const Eigen::VectorXd& z) const;

private:
    Eigen::VectorXd check_and_standardize(const Observation& x) const;
    double quad_form(int k, const Eigen::VectorXd& z) const;

    PredictorSchema schema_;
    Standardization standardization_;
    SignalRanges signal_ranges_;
    double lambda_ = 0.0;
    std::vector<ClassStats> classes_;
};

struct FitOptions {
    double lambda = 1e-3; // diagonal shrinkage coefficient
};

// Trains the classifier: empirical priors, per-class sample moments
// (covariance denominator N_k), diagonal shrinkage, pooled z-score
// standardization and per-predictor training ranges. Classes are ordered
// by (switch_config, pd_status). When class_enumeration is given, every
// enumerated class must be present in the data.
DaModel fit(const std::vector<LabeledObservation>& dataset, const PredictorSchema& schema,
            const FitOptions& options = {},
            const std::vector<TopologyLabel>* class_enumeration = nullptr);

} // namespace gridtid
