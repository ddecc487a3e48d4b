#include <gridtid/anomaly.hpp>

#include <gridtid/numeric.hpp>

#include <algorithm>
#include <cmath>

namespace gridtid {

double mixture_log_likelihood(const DaModel& model, const Observation& x) {
    Eigen::VectorXd lj(model.num_classes());
    for (int k = 0; k < model.num_classes(); ++k)
        lj[k] = model.log_density(k, x) + std::log(model.class_stats(k).prior);
    return log_sum_exp(lj);
}

AnomalyVerdict likelihood_ratio(const DaModel& model, const Observation& x_suspect,
                                const std::vector<int>& suspect_idx) {
    validate_observation(x_suspect, model.schema());
    if (!x_suspect.complete())
        throw IncompleteObservation("likelihood_ratio: suspect observation must be complete");
    if (suspect_idx.empty())
        throw ValidationError("likelihood_ratio: empty suspect set");
    if (static_cast<int>(suspect_idx.size()) >= model.dimension())
        throw AllSignalsMissing("likelihood_ratio: suspect set covers every predictor");

    Observation masked = x_suspect;
    for (int i : suspect_idx) {
        if (i < 0 || i >= model.dimension())
            throw ValidationError("likelihood_ratio: suspect index out of range");
        masked.available[static_cast<std::size_t>(i)] = false;
    }

    const RecoveryResult rec = recover(model, masked);

    AnomalyVerdict v;
    v.suspect_idx = rec.missing_idx;
    v.recovered_values = rec.per_class[static_cast<std::size_t>(rec.best_class)].recovered;
    v.log_alpha = mixture_log_likelihood(model, rec.recovered_observation) -
                  mixture_log_likelihood(model, x_suspect);
    v.alpha = std::exp(v.log_alpha);
    return v;
}

AnomalyVerdict detect(const DaModel& model, const Observation& x,
                      const std::vector<int>& suspect_idx, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("detect: threshold must be positive");
    AnomalyVerdict v = likelihood_ratio(model, x, suspect_idx);
    v.threshold = threshold;
    v.is_anomalous = v.alpha > threshold;

    Observation scored = x;
    if (v.is_anomalous) {
        for (std::size_t i = 0; i < v.suspect_idx.size(); ++i)
            scored.values[v.suspect_idx[i]] = v.recovered_values[static_cast<Eigen::Index>(i)];
    }
    const Classification c = model.classify(scored);
    v.final_label = c.label;
    v.final_posterior = c.posterior;
    return v;
}

double calibrate_threshold(const DaModel& model, const std::vector<Observation>& clean_validation,
                           const std::vector<int>& suspect_idx, double target_false_alarm) {
    if (clean_validation.empty())
        throw EmptyValidation("calibrate_threshold: empty validation set");
    if (target_false_alarm < 0.0 || target_false_alarm >= 1.0)
        throw ValidationError("calibrate_threshold: target false alarm must lie in [0,1)");

    std::vector<double> alphas;
    alphas.reserve(clean_validation.size());
    for (const auto& obs : clean_validation)
        alphas.push_back(likelihood_ratio(model, obs, suspect_idx).alpha);
    return quantile(std::move(alphas), 1.0 - target_false_alarm);
}

} // namespace gridtid
