#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gridtid/eval.hpp>

#include "support/builders.hpp"
#include "support/oracles.hpp"

#include <random>

using namespace gridtid;
using testutil::bits_equal;
using testutil::make_model;
using testutil::obs_of;

namespace {

TopologyLabel lbl(const std::string& config, const std::string& pd) { return {config, pd}; }

// Schema with three units: two informative, one pure-noise decoy.
PredictorSchema unit_schema() {
    PredictorSchema s;
    s.names = {"U1:p", "U1:v", "U2:p", "U2:v", "DECOY:n1", "DECOY:n2"};
    return s;
}

struct SyntheticProblem {
    DaModel model;
    Dataset train;
    Dataset test;
};

// Three well-separated classes; U1 carries most of the separation, U2 a
// smaller share, DECOY none.
SyntheticProblem make_problem(std::uint64_t seed, int n_train_per_class = 150,
                              int n_test_per_class = 80) {
    const PredictorSchema schema = unit_schema();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::vector<TopologyLabel> labels = {lbl("C1", "0"), lbl("C2", "0"), lbl("C3", "0")};
    // U1 means sit far from zero so that multiplicative biases displace
    // their coordinates by several class sigmas.
    auto class_mean = [](int k) {
        Eigen::VectorXd m(6);
        m << 40.0 + 6.0 * k, -30.0 - 4.0 * k, 1.5 * k, 0.8 * k, 0.0, 0.0;
        return m;
    };

    Dataset train, test;
    train.schema = test.schema = schema;
    train.class_labels = test.class_labels = labels;
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < n_train_per_class + n_test_per_class; ++i) {
            Eigen::VectorXd v = class_mean(k);
            for (int j = 0; j < 6; ++j) v[j] += gauss(rng);
            LabeledObservation row{obs_of(schema, v), labels[static_cast<std::size_t>(k)]};
            if (i < n_train_per_class) train.rows.push_back(std::move(row));
            else test.rows.push_back(std::move(row));
        }
    }
    DaModel model = fit(train.rows, schema, {}, &train.class_labels);
    return {std::move(model), std::move(train), std::move(test)};
}

} // namespace

TEST_CASE("confusion: separable problem is diagonal; tallies are conserved") {
    SyntheticProblem prob = make_problem(9001);
    const ConfusionMatrix cm = confusion(prob.model, prob.test, Pipeline::plain());
    CHECK(cm.total() == static_cast<int>(prob.test.rows.size()));
    CHECK(cm.correct() == cm.total()); // 6-sigma spacing: no errors expected

    // Column sums equal per-class test counts.
    for (int a = 0; a < cm.counts.cols(); ++a)
        CHECK(cm.counts.col(a).sum() == 80);
}

TEST_CASE("confusion: single-class test set fills one column") {
    SyntheticProblem prob = make_problem(9002);
    Dataset single;
    single.schema = prob.test.schema;
    single.class_labels = prob.test.class_labels;
    for (const auto& row : prob.test.rows)
        if (row.label == lbl("C2", "0")) single.rows.push_back(row);
    const ConfusionMatrix cm = confusion(prob.model, single, Pipeline::plain());
    for (int a = 0; a < cm.counts.cols(); ++a) {
        const int expected = (cm.labels[static_cast<std::size_t>(a)] == lbl("C2", "0")) ? 80 : 0;
        CHECK(cm.counts.col(a).sum() == expected);
    }
}

TEST_CASE("split_rates: anchors and the partition identity") {
    SUBCASE("diagonal matrix gives zero rates") {
        ConfusionMatrix cm;
        cm.labels = {lbl("C1", "0"), lbl("C1", "1"), lbl("C2", "0"), lbl("C2", "1")};
        cm.counts = Eigen::MatrixXi::Zero(4, 4);
        cm.counts.diagonal() << 10, 20, 30, 40;
        const SplitRates r = split_rates(cm);
        CHECK(r.avg_sc_misid == 0.0);
        CHECK(r.avg_pds_misid == 0.0);
        CHECK(r.accuracy == 1.0);
    }
    SUBCASE("always right on configuration, always wrong on device status") {
        ConfusionMatrix cm;
        cm.labels = {lbl("C1", "0"), lbl("C1", "1"), lbl("C2", "0"), lbl("C2", "1")};
        cm.counts = Eigen::MatrixXi::Zero(4, 4);
        cm.counts(1, 0) = 10; // C1-0 predicted as C1-1
        cm.counts(0, 1) = 10;
        cm.counts(3, 2) = 10;
        cm.counts(2, 3) = 10;
        const SplitRates r = split_rates(cm);
        CHECK(r.avg_sc_misid == 0.0);
        CHECK(r.avg_pds_misid == 1.0);
        CHECK(r.accuracy == 0.0);
    }
    SUBCASE("sc + pds + correct = 1 per configuration on a random matrix") {
        std::mt19937_64 rng(5150);
        ConfusionMatrix cm;
        cm.labels = {lbl("C1", "0"), lbl("C1", "1"), lbl("C2", "0"), lbl("C2", "1"),
                     lbl("C3", "0"), lbl("C3", "1")};
        cm.counts = Eigen::MatrixXi::Zero(6, 6);
        for (int p = 0; p < 6; ++p)
            for (int a = 0; a < 6; ++a) cm.counts(p, a) = static_cast<int>(rng() % 17);
        const SplitRates r = split_rates(cm);
        for (const auto& pc : r.per_config) {
            // Fully-correct fraction for this configuration.
            long correct = 0, n = 0;
            for (int a = 0; a < 6; ++a) {
                if (cm.labels[static_cast<std::size_t>(a)].switch_config != pc.config) continue;
                for (int p = 0; p < 6; ++p) {
                    n += cm.counts(p, a);
                    if (p == a) correct += cm.counts(p, a);
                }
            }
            const double frac = static_cast<double>(correct) / static_cast<double>(n);
            CHECK(pc.sc_misid + pc.pds_misid + frac == doctest::Approx(1.0).epsilon(1e-12));
        }
        // Aggregate identity against the matrix totals.
        CHECK(r.accuracy ==
              doctest::Approx(1.0 - r.aggregate_sc_misid - r.aggregate_pds_misid).epsilon(1e-12));
        CHECK(r.accuracy ==
              doctest::Approx(static_cast<double>(cm.correct()) / cm.total()).epsilon(1e-12));
    }
}

TEST_CASE("roc: separable AUC=1, anchored monotone points, trapezoid identity") {
    SyntheticProblem prob = make_problem(77);
    for (int k = 0; k < prob.model.num_classes(); ++k) {
        const RocCurve curve = roc(prob.model, prob.test, k);
        CHECK(curve.auc == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(curve.points.front().fpr == 0.0);
        CHECK(curve.points.front().tpr == 0.0);
        CHECK(curve.points.back().fpr == 1.0);
        CHECK(curve.points.back().tpr == 1.0);
        double auc = 0.0;
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
            CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
            auc += (curve.points[i].fpr - curve.points[i - 1].fpr) *
                   (curve.points[i].tpr + curve.points[i - 1].tpr) * 0.5;
        }
        CHECK(curve.auc == doctest::Approx(auc).epsilon(1e-12));
    }
}

TEST_CASE("roc: null model stays near one half") {
    // Two classes with identical distributions: posterior scores carry no
    // information, labels are effectively random against them.
    const PredictorSchema schema = testutil::schema_of(2);
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<ClassParams> classes;
    classes.push_back({testutil::label(0), 0.5, Eigen::Vector2d(0, 0),
                       Eigen::MatrixXd::Identity(2, 2)});
    classes.push_back({testutil::label(1), 0.5, Eigen::Vector2d(0.05, -0.05),
                       Eigen::MatrixXd::Identity(2, 2)});
    const DaModel model = make_model(schema, classes);

    Dataset test;
    test.schema = schema;
    test.class_labels = {testutil::label(0), testutil::label(1)};
    for (int i = 0; i < 2000; ++i) {
        Eigen::VectorXd v(2);
        v << gauss(rng), gauss(rng);
        test.rows.push_back({obs_of(schema, v), testutil::label(static_cast<int>(rng() % 2))});
    }
    const RocCurve curve = roc(model, test, 0);
    CHECK(curve.auc == doctest::Approx(0.5).epsilon(0.1));

    SUBCASE("degenerate class is rejected") {
        Dataset one_sided = test;
        one_sided.rows.clear();
        for (const auto& row : test.rows)
            if (row.label == testutil::label(0)) one_sided.rows.push_back(row);
        CHECK_THROWS_AS(roc(model, one_sided, 0), DegenerateClass);
    }
}

TEST_CASE("missing_unit_sweep: decoy unit is harmless, informative unit is not") {
    SyntheticProblem prob = make_problem(4242);
    const MissingUnitReport report =
        missing_unit_sweep(prob.model, prob.train, prob.test, {"DECOY", "U1"});

    const auto& decoy = report.units[0];
    CHECK(decoy.unit == "DECOY");
    // Pure-noise predictors: every strategy matches the full baseline.
    CHECK(decoy.mean_substitution.accuracy ==
          doctest::Approx(report.baseline.accuracy).epsilon(0.02));
    CHECK(decoy.recovery.accuracy == doctest::Approx(report.baseline.accuracy).epsilon(0.02));
    CHECK(decoy.retrained.accuracy == doctest::Approx(report.baseline.accuracy).epsilon(0.02));

    const auto& u1 = report.units[1];
    CHECK(u1.unit == "U1");
    // Recovery never loses to mean substitution on configuration accuracy.
    CHECK(u1.recovery.sc_accuracy >= u1.mean_substitution.sc_accuracy);
    // Correlation list covers exactly U1's predictors.
    REQUIRE(u1.recovered_correlation.size() == 2);
    CHECK(u1.recovered_correlation[0].first == "U1:p");
    CHECK(u1.recovered_correlation[1].first == "U1:v");
}

TEST_CASE("pair_drop_sweep: full-meter baseline ranks at least as well as any pair") {
    SyntheticProblem prob = make_problem(555);
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"U1", "U2"}, {"U1", "DECOY"}, {"U2", "DECOY"}};
    const PairDropReport report = pair_drop_sweep(prob.train, prob.test, pairs);
    REQUIRE(report.entries.size() == 3);
    for (const auto& e : report.entries)
        CHECK(report.baseline_avg_sc_misid <= e.avg_sc_misid + 0.005);
    // Ranked ascending by misidentification.
    for (std::size_t i = 1; i < report.entries.size(); ++i)
        CHECK(report.entries[i - 1].avg_sc_misid <= report.entries[i].avg_sc_misid);
    // Dropping both informative units must rank strictly worst.
    CHECK(report.entries.back().unit_a == "U1");
    CHECK(report.entries.back().unit_b == "U2");
}

TEST_CASE("anomaly_sweep: null manipulation obeys the calibrated bound, bias is caught") {
    SyntheticProblem prob = make_problem(808);
    // Move the class means away from zero so a multiplicative bias is a
    // real displacement on every coordinate.
    const std::vector<int> u1 = unit_indices(prob.model.schema(), "U1");

    std::vector<Observation> calib;
    for (const auto& row : prob.train.rows) calib.push_back(row.obs);
    const double threshold = calibrate_threshold(prob.model, calib, u1, 0.05);

    const AnomalySweepReport report =
        anomaly_sweep(prob.model, prob.test, {"U1"}, {0.9, 1.1}, threshold);
    REQUIRE(report.units.size() == 1);
    const auto& pu = report.units[0];
    CHECK(pu.false_alarm_rate <= 0.05 + 0.02);
    CHECK(pu.detection_rate.at(0.9) >= 0.9);
    CHECK(pu.detection_rate.at(1.1) >= 0.9);

    // Histograms count every observation exactly once.
    std::size_t clean_total = 0;
    for (std::size_t c : pu.clean_histogram) clean_total += c;
    CHECK(clean_total == prob.test.rows.size());
}
