#pragma once

#include <gridtid/anomaly.hpp>
#include <gridtid/dataset.hpp>

#include <map>
#include <string>
#include <vector>

namespace gridtid {

// Rows are predicted labels, columns actual labels.
struct ConfusionMatrix {
    std::vector<TopologyLabel> labels;
    Eigen::MatrixXi counts;

    int total() const { return counts.sum(); }
    int correct() const { return static_cast<int>(counts.diagonal().sum()); }
};

// Observation pipeline for confusion(): classify as-is, mask a predictor
// group and recover first, or run the anomaly benchmark first.
struct Pipeline {
    enum class Kind { plain, recover_missing, detect_suspect };
    Kind kind = Kind::plain;
    std::vector<int> predictor_idx; // masked / suspect predictors
    double threshold = 0.0;         // detect_suspect only

    static Pipeline plain() { return {}; }
    static Pipeline recover_missing(std::vector<int> idx) {
        return {Kind::recover_missing, std::move(idx), 0.0};
    }
    static Pipeline detect_suspect(std::vector<int> idx, double threshold) {
        return {Kind::detect_suspect, std::move(idx), threshold};
    }
};

ConfusionMatrix confusion(const DaModel& model, const Dataset& test, const Pipeline& pipeline);

// Misidentification split per actual switching configuration:
// sc = predicted configuration wrong; pds = configuration right but
// device status wrong. The two rates and the fully-correct fraction
// partition each column group.
struct SplitRates {
    struct PerConfig {
        std::string config;
        int count = 0;
        double sc_misid = 0.0;
        double pds_misid = 0.0;
    };
    std::vector<PerConfig> per_config;
    double avg_sc_misid = 0.0; // unweighted mean over configurations
    double avg_pds_misid = 0.0;
    double aggregate_sc_misid = 0.0; // weighted by test counts
    double aggregate_pds_misid = 0.0;
    double accuracy = 0.0; // fully correct fraction
};

SplitRates split_rates(const ConfusionMatrix& cm);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    TopologyLabel class_label;
    std::vector<RocPoint> points; // (0,0) first, (1,1) last
    double auc = 0.0;
};

// One-vs-rest sweep over posterior[k]; thresholds are every distinct
// posterior value plus the {0,1} anchors.
RocCurve roc(const DaModel& model, const Dataset& test, int k);
std::vector<RocCurve> roc_all(const DaModel& model, const Dataset& test);

// Per-unit comparison of the three missing-signal strategies.
struct MissingUnitReport {
    struct Strategy {
        double avg_sc_misid = 0.0;
        double avg_pds_misid = 0.0;
        double sc_accuracy = 0.0; // aggregate correct-configuration fraction
        double accuracy = 0.0;    // aggregate fully-correct fraction
    };
    struct PerUnit {
        std::string unit;
        Strategy mean_substitution;
        Strategy recovery;
        Strategy retrained;
        // predictor name -> correlation(recovered, actual) over the test set
        std::vector<std::pair<std::string, double>> recovered_correlation;
    };
    Strategy baseline; // plain pipeline, full schema
    std::vector<PerUnit> units;
};

MissingUnitReport missing_unit_sweep(const DaModel& model, const Dataset& train,
                                     const Dataset& test, const std::vector<std::string>& units,
                                     const FitOptions& fit_options = {});

// Anomaly benchmark sweep: manipulate each unit by every scale, run
// detect, and histogram alpha on clean and manipulated data.
struct AnomalySweepReport {
    std::vector<double> histogram_edges; // alpha buckets, recorded in output
    struct PerUnit {
        std::string unit;
        double threshold = 0.0;
        double false_alarm_rate = 0.0; // clean observations flagged
        std::vector<std::size_t> clean_histogram;
        std::map<double, double> detection_rate;                 // scale -> rate
        std::map<double, std::vector<std::size_t>> manipulated_histogram;
    };
    std::vector<PerUnit> units;
};

AnomalySweepReport anomaly_sweep(const DaModel& model, const Dataset& test,
                                 const std::vector<std::string>& units,
                                 const std::vector<double>& scales, double threshold);

// Retrain/test without each pair of units; ranked by average
// switching-configuration misidentification (best first).
struct PairDropReport {
    struct Entry {
        std::string unit_a;
        std::string unit_b;
        double avg_sc_misid = 0.0;
        double avg_pds_misid = 0.0;
        std::vector<SplitRates::PerConfig> per_config;
    };
    double baseline_avg_sc_misid = 0.0; // all meters present
    std::vector<Entry> entries;
};

PairDropReport pair_drop_sweep(const Dataset& train, const Dataset& test,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               const FitOptions& fit_options = {});

} // namespace gridtid
