#pragma once

#include <gridtid/recovery.hpp>

#include <vector>

namespace gridtid {

struct AnomalyVerdict {
    double alpha = 1.0;
    double log_alpha = 0.0;
    double threshold = 0.0;
    bool is_anomalous = false;
    std::vector<int> suspect_idx;
    Eigen::VectorXd recovered_values; // over suspect_idx, raw units
    TopologyLabel final_label;
    Eigen::VectorXd final_posterior;
};

// log sum_k rho_k f_k(x), evaluated with log-sum-exp.
double mixture_log_likelihood(const DaModel& model, const Observation& x);

// Treats the suspect entries as missing, recovers them, and returns the
// mixture-likelihood ratio alpha = L(recovered) / L(suspect) together
// with the recovered values. threshold/final_label are left unset.
AnomalyVerdict likelihood_ratio(const DaModel& model, const Observation& x_suspect,
                                const std::vector<int>& suspect_idx);

// Full benchmark: alpha > threshold flags the suspect group as anomalous
// and the recovered observation is classified instead of the raw one.
AnomalyVerdict detect(const DaModel& model, const Observation& x,
                      const std::vector<int>& suspect_idx, double threshold);

// (1 - target_false_alarm) quantile of alpha over a clean validation set
// for the given suspect group.
double calibrate_threshold(const DaModel& model, const std::vector<Observation>& clean_validation,
                           const std::vector<int>& suspect_idx, double target_false_alarm);

} // namespace gridtid
