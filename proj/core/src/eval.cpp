#include <gridtid/eval.hpp>

#include <gridtid/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gridtid {

namespace {

int label_index(const std::vector<TopologyLabel>& labels, const TopologyLabel& label) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<int>(i);
    return -1;
}

Observation masked_copy(const Observation& obs, const std::vector<int>& idx) {
    Observation m = obs;
    for (int i : idx) m.available[static_cast<std::size_t>(i)] = false;
    return m;
}

} // namespace

ConfusionMatrix confusion(const DaModel& model, const Dataset& test, const Pipeline& pipeline) {
    if (test.rows.empty()) throw ValidationError("confusion: empty test set");
    ConfusionMatrix cm;
    cm.labels = test.class_labels;
    const int k = static_cast<int>(cm.labels.size());
    cm.counts = Eigen::MatrixXi::Zero(k, k);

    for (const auto& row : test.rows) {
        const int actual = label_index(cm.labels, row.label);
        if (actual < 0)
            throw ValidationError("confusion: label " + row.label.str() + " not in enumeration");

        TopologyLabel predicted;
        switch (pipeline.kind) {
        case Pipeline::Kind::plain:
            predicted = model.classify(row.obs).label;
            break;
        case Pipeline::Kind::recover_missing: {
            const RecoveryResult rec = recover(model, masked_copy(row.obs, pipeline.predictor_idx));
            predicted = model.class_stats(rec.best_class).label;
            break;
        }
        case Pipeline::Kind::detect_suspect:
            predicted =
                detect(model, row.obs, pipeline.predictor_idx, pipeline.threshold).final_label;
            break;
        }

        const int pred = label_index(cm.labels, predicted);
        if (pred < 0)
            throw ValidationError("confusion: predicted label " + predicted.str() +
                                  " not in enumeration");
        cm.counts(pred, actual) += 1;
    }
    return cm;
}

SplitRates split_rates(const ConfusionMatrix& cm) {
    std::vector<std::string> configs;
    for (const auto& label : cm.labels)
        if (std::find(configs.begin(), configs.end(), label.switch_config) == configs.end())
            configs.push_back(label.switch_config);

    SplitRates out;
    const int k = static_cast<int>(cm.labels.size());
    long total = 0, total_sc = 0, total_pds = 0, total_correct = 0;
    for (const auto& config : configs) {
        long n = 0, sc_wrong = 0, pds_wrong = 0;
        for (int a = 0; a < k; ++a) {
            if (cm.labels[static_cast<std::size_t>(a)].switch_config != config) continue;
            for (int p = 0; p < k; ++p) {
                const long c = cm.counts(p, a);
                if (c == 0) continue;
                n += c;
                const auto& pl = cm.labels[static_cast<std::size_t>(p)];
                if (pl.switch_config != config) sc_wrong += c;
                else if (pl.pd_status != cm.labels[static_cast<std::size_t>(a)].pd_status)
                    pds_wrong += c;
            }
        }
        SplitRates::PerConfig pc;
        pc.config = config;
        pc.count = static_cast<int>(n);
        pc.sc_misid = n ? static_cast<double>(sc_wrong) / static_cast<double>(n) : 0.0;
        pc.pds_misid = n ? static_cast<double>(pds_wrong) / static_cast<double>(n) : 0.0;
        out.per_config.push_back(pc);
        total += n;
        total_sc += sc_wrong;
        total_pds += pds_wrong;
        total_correct += n - sc_wrong - pds_wrong;
        out.avg_sc_misid += pc.sc_misid;
        out.avg_pds_misid += pc.pds_misid;
    }
    const auto nc = static_cast<double>(configs.size());
    out.avg_sc_misid /= nc;
    out.avg_pds_misid /= nc;
    if (total > 0) {
        out.aggregate_sc_misid = static_cast<double>(total_sc) / static_cast<double>(total);
        out.aggregate_pds_misid = static_cast<double>(total_pds) / static_cast<double>(total);
        out.accuracy = static_cast<double>(total_correct) / static_cast<double>(total);
    }
    return out;
}

namespace {

RocCurve roc_from_scores(const TopologyLabel& class_label, std::vector<std::pair<double, bool>> scored) {
    long pos = 0, neg = 0;
    for (const auto& [s, is_pos] : scored) (is_pos ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw DegenerateClass("roc: class " + class_label.str() +
                              " lacks positives or negatives in the test set");

    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve curve;
    curve.class_label = class_label;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        const double t = scored[i].first;
        while (i < scored.size() && scored[i].first == t) {
            (scored[i].second ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    if (curve.points.back().threshold != 0.0 || curve.points.back().tpr != 1.0 ||
        curve.points.back().fpr != 1.0)
        curve.points.push_back({0.0, 1.0, 1.0});

    double auc = 0.0;
    for (std::size_t p = 1; p < curve.points.size(); ++p)
        auc += (curve.points[p].fpr - curve.points[p - 1].fpr) *
               (curve.points[p].tpr + curve.points[p - 1].tpr) * 0.5;
    curve.auc = auc;
    return curve;
}

} // namespace

RocCurve roc(const DaModel& model, const Dataset& test, int k) {
    if (k < 0 || k >= model.num_classes()) throw ValidationError("roc: bad class index");
    const TopologyLabel target = model.class_stats(k).label;
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(test.rows.size());
    for (const auto& row : test.rows) {
        const Eigen::VectorXd post = model.posterior(row.obs);
        scored.emplace_back(post[k], row.label == target);
    }
    return roc_from_scores(target, std::move(scored));
}

std::vector<RocCurve> roc_all(const DaModel& model, const Dataset& test) {
    std::vector<std::vector<std::pair<double, bool>>> scored(
        static_cast<std::size_t>(model.num_classes()));
    for (const auto& row : test.rows) {
        const Eigen::VectorXd post = model.posterior(row.obs);
        for (int k = 0; k < model.num_classes(); ++k)
            scored[static_cast<std::size_t>(k)].emplace_back(post[k],
                                                             row.label == model.class_stats(k).label);
    }
    std::vector<RocCurve> out;
    out.reserve(scored.size());
    for (int k = 0; k < model.num_classes(); ++k)
        out.push_back(roc_from_scores(model.class_stats(k).label,
                                      std::move(scored[static_cast<std::size_t>(k)])));
    return out;
}

namespace {

MissingUnitReport::Strategy strategy_from(const SplitRates& r) {
    MissingUnitReport::Strategy s;
    s.avg_sc_misid = r.avg_sc_misid;
    s.avg_pds_misid = r.avg_pds_misid;
    s.sc_accuracy = 1.0 - r.aggregate_sc_misid;
    s.accuracy = r.accuracy;
    return s;
}

} // namespace

MissingUnitReport missing_unit_sweep(const DaModel& model, const Dataset& train,
                                     const Dataset& test, const std::vector<std::string>& units,
                                     const FitOptions& fit_options) {
    MissingUnitReport report;
    report.baseline = strategy_from(split_rates(confusion(model, test, Pipeline::plain())));

    for (const auto& unit : units) {
        const std::vector<int> idx = unit_indices(model.schema(), unit);
        MissingUnitReport::PerUnit pu;
        pu.unit = unit;

        // (a) training-mean substitution
        {
            ConfusionMatrix cm;
            cm.labels = test.class_labels;
            const int k = static_cast<int>(cm.labels.size());
            cm.counts = Eigen::MatrixXi::Zero(k, k);
            for (const auto& row : test.rows) {
                Observation sub = row.obs;
                for (int i : idx) sub.values[i] = model.standardization().shift[i];
                const int actual = label_index(cm.labels, row.label);
                const int pred = label_index(cm.labels, model.classify(sub).label);
                if (actual < 0 || pred < 0)
                    throw ValidationError("missing_unit_sweep: label outside enumeration");
                cm.counts(pred, actual) += 1;
            }
            pu.mean_substitution = strategy_from(split_rates(cm));
        }

        // (b) QP recovery, with recovered-vs-actual correlations
        {
            ConfusionMatrix cm;
            cm.labels = test.class_labels;
            const int k = static_cast<int>(cm.labels.size());
            cm.counts = Eigen::MatrixXi::Zero(k, k);
            std::vector<std::vector<double>> rec_vals(idx.size()), act_vals(idx.size());
            for (const auto& row : test.rows) {
                const RecoveryResult rec = recover(model, masked_copy(row.obs, idx));
                const auto& best = rec.per_class[static_cast<std::size_t>(rec.best_class)];
                const int actual = label_index(cm.labels, row.label);
                const int pred =
                    label_index(cm.labels, model.class_stats(rec.best_class).label);
                if (actual < 0 || pred < 0)
                    throw ValidationError("missing_unit_sweep: label outside enumeration");
                cm.counts(pred, actual) += 1;
                for (std::size_t s = 0; s < idx.size(); ++s) {
                    rec_vals[s].push_back(best.recovered[static_cast<Eigen::Index>(s)]);
                    act_vals[s].push_back(row.obs.values[rec.missing_idx[s]]);
                }
            }
            pu.recovery = strategy_from(split_rates(cm));
            const std::vector<int> sorted_idx = [&] {
                std::vector<int> v = idx;
                std::sort(v.begin(), v.end());
                return v;
            }();
            for (std::size_t s = 0; s < sorted_idx.size(); ++s)
                pu.recovered_correlation.emplace_back(
                    model.schema().names[static_cast<std::size_t>(sorted_idx[s])],
                    pearson_correlation(rec_vals[s], act_vals[s]));
        }

        // (c) fresh model on the reduced schema
        {
            const Dataset train_red = drop_predictors(train, idx);
            const Dataset test_red = drop_predictors(test, idx);
            const DaModel reduced =
                fit(train_red.rows, train_red.schema, fit_options, &train_red.class_labels);
            pu.retrained = strategy_from(split_rates(confusion(reduced, test_red, Pipeline::plain())));
        }

        report.units.push_back(std::move(pu));
    }
    return report;
}

AnomalySweepReport anomaly_sweep(const DaModel& model, const Dataset& test,
                                 const std::vector<std::string>& units,
                                 const std::vector<double>& scales, double threshold) {
    if (test.rows.empty()) throw ValidationError("anomaly_sweep: empty test set");
    AnomalySweepReport report;
    report.histogram_edges = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 60.0, 1e3, 1e6, 1e12,
                              std::numeric_limits<double>::infinity()};

    auto bucket_of = [&](double alpha) {
        std::size_t b = 0;
        while (b + 2 < report.histogram_edges.size() && alpha >= report.histogram_edges[b + 1]) ++b;
        return b;
    };

    for (const auto& unit : units) {
        const std::vector<int> idx = unit_indices(model.schema(), unit);
        AnomalySweepReport::PerUnit pu;
        pu.unit = unit;
        pu.threshold = threshold;
        pu.clean_histogram.assign(report.histogram_edges.size() - 1, 0);

        long false_alarms = 0;
        for (const auto& row : test.rows) {
            const AnomalyVerdict v = detect(model, row.obs, idx, threshold);
            if (v.is_anomalous) ++false_alarms;
            pu.clean_histogram[bucket_of(v.alpha)] += 1;
        }
        pu.false_alarm_rate =
            static_cast<double>(false_alarms) / static_cast<double>(test.rows.size());

        for (double scale : scales) {
            std::vector<std::size_t> hist(report.histogram_edges.size() - 1, 0);
            long detected = 0;
            for (const auto& row : test.rows) {
                Observation manip = row.obs;
                for (int i : idx) manip.values[i] *= scale;
                const AnomalyVerdict v = detect(model, manip, idx, threshold);
                if (v.is_anomalous) ++detected;
                hist[bucket_of(v.alpha)] += 1;
            }
            pu.detection_rate[scale] =
                static_cast<double>(detected) / static_cast<double>(test.rows.size());
            pu.manipulated_histogram[scale] = std::move(hist);
        }
        report.units.push_back(std::move(pu));
    }
    return report;
}

PairDropReport pair_drop_sweep(const Dataset& train, const Dataset& test,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               const FitOptions& fit_options) {
    PairDropReport report;
    {
        const DaModel full = fit(train.rows, train.schema, fit_options, &train.class_labels);
        report.baseline_avg_sc_misid =
            split_rates(confusion(full, test, Pipeline::plain())).avg_sc_misid;
    }
    for (const auto& [ua, ub] : pairs) {
        std::vector<int> idx = unit_indices(train.schema, ua);
        const std::vector<int> idx_b = unit_indices(train.schema, ub);
        idx.insert(idx.end(), idx_b.begin(), idx_b.end());

        const Dataset train_red = drop_predictors(train, idx);
        const Dataset test_red = drop_predictors(test, idx);
        const DaModel reduced =
            fit(train_red.rows, train_red.schema, fit_options, &train_red.class_labels);
        const SplitRates rates = split_rates(confusion(reduced, test_red, Pipeline::plain()));

        PairDropReport::Entry e;
        e.unit_a = ua;
        e.unit_b = ub;
        e.avg_sc_misid = rates.avg_sc_misid;
        e.avg_pds_misid = rates.avg_pds_misid;
        e.per_config = rates.per_config;
        report.entries.push_back(std::move(e));
    }
    std::sort(report.entries.begin(), report.entries.end(), [](const auto& a, const auto& b) {
        if (a.avg_sc_misid != b.avg_sc_misid) return a.avg_sc_misid < b.avg_sc_misid;
        return std::tie(a.unit_a, a.unit_b) < std::tie(b.unit_a, b.unit_b);
    });
    return report;
}

} // namespace gridtid
