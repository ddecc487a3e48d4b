#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gridtid/dataset.hpp>
#include <gridtid/serialize.hpp>
#include <gridtid/simgen.hpp>

#include "support/builders.hpp"
#include "support/oracles.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace gridtid;
using testutil::bits_equal;

namespace {

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::path(GRIDTID_TEST_TMPDIR) / "io";
    std::filesystem::create_directories(dir);
    return dir;
}

DaModel fitted_reference_model(const FeederModel& feeder, Dataset& train_out, Dataset& test_out) {
    auto [train, test] = generate_dataset(feeder, 40, 4321, 0.75);
    DaModel model = fit(train.rows, train.schema, {}, &train.class_labels);
    train_out = std::move(train);
    test_out = std::move(test);
    return model;
}

} // namespace

TEST_CASE("model serialization: bit-exact scoring after a round trip") {
    const FeederModel feeder = load_feeder(GRIDTID_REFERENCE_FEEDER);
    Dataset train, test;
    const DaModel model = fitted_reference_model(feeder, train, test);

    const auto path = scratch_dir() / "model.json";
    save_model(model, path);
    const DaModel loaded = load_model(path);

    CHECK(loaded.schema() == model.schema());
    CHECK(loaded.num_classes() == model.num_classes());
    CHECK(loaded.lambda() == model.lambda());

    for (std::size_t i = 0; i < test.rows.size(); i += 7) {
        const auto& obs = test.rows[i].obs;
        const Classification a = model.classify(obs);
        const Classification b = loaded.classify(obs);
        CHECK(a.label == b.label);
        CHECK(bits_equal(a.posterior, b.posterior));
        for (int k = 0; k < model.num_classes(); ++k)
            CHECK(model.discriminant_score(k, obs) == loaded.discriminant_score(k, obs));
    }

    SUBCASE("re-serialization is byte-identical") {
        CHECK(model_to_json(model) == model_to_json(loaded));
    }
    SUBCASE("derived quantities are rebuilt and verified on load") {
        for (int k = 0; k < loaded.num_classes(); ++k) {
            const auto& cs = loaded.class_stats(k);
            const Eigen::MatrixXd residual =
                cs.precision * cs.covariance -
                Eigen::MatrixXd::Identity(model.dimension(), model.dimension());
            CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("model serialization: invariant violations are rejected on load") {
    const FeederModel feeder = load_feeder(GRIDTID_REFERENCE_FEEDER);
    Dataset train, test;
    const DaModel model = fitted_reference_model(feeder, train, test);
    const std::string text = model_to_json(model);

    SUBCASE("garbled JSON") {
        CHECK_THROWS_AS(model_from_json("{ not json"), ValidationError);
    }
    SUBCASE("wrong format tag") {
        std::string bad = text;
        const auto pos = bad.find("gridtid-da-model");
        bad.replace(pos, 16, "something-else!!");
        CHECK_THROWS_AS(model_from_json(bad), ValidationError);
    }
    SUBCASE("broken prior normalization") {
        std::string bad = text;
        const auto pos = bad.find("\"prior\":");
        bad.replace(pos, 9, "\"prior\": 0.5 + ");
        // Either a parse error or a prior-sum violation; both must throw.
        CHECK_THROWS_AS(model_from_json(bad), Error);
    }
}

TEST_CASE("dataset CSV: round trip with missing cells") {
    PredictorSchema schema;
    schema.names = {"A:x", "A:y", "B:x"};
    Dataset ds;
    ds.schema = schema;
    ds.class_labels = {{"C1", "0"}, {"C2", "0"}};

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        Eigen::VectorXd v(3);
        for (int j = 0; j < 3; ++j) v[j] = std::pow(10.0, (i % 7) - 3) * gauss(rng);
        Observation obs = Observation::complete_of(v, schema);
        if (i % 5 == 2) {
            obs.available[1] = false;
            obs.values[1] = std::numeric_limits<double>::quiet_NaN();
        }
        ds.rows.push_back({std::move(obs), (i % 2) ? ds.class_labels[1] : ds.class_labels[0]});
    }

    const auto path = scratch_dir() / "roundtrip.csv";
    write_dataset_csv(ds, path);
    const Dataset back = read_dataset_csv(path);

    REQUIRE(back.rows.size() == ds.rows.size());
    CHECK(back.schema == ds.schema);
    CHECK(back.class_labels == ds.class_labels);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.rows[i].label == ds.rows[i].label);
        CHECK(back.rows[i].obs.available == ds.rows[i].obs.available);
        for (int j = 0; j < 3; ++j) {
            if (!ds.rows[i].obs.available[static_cast<std::size_t>(j)]) continue;
            CHECK(back.rows[i].obs.values[j] == ds.rows[i].obs.values[j]);
        }
    }

    SUBCASE("header validation") {
        std::ofstream out(scratch_dir() / "bad.csv");
        out << "A:x,A:y\n1,2\n";
        out.close();
        CHECK_THROWS_AS(read_dataset_csv(scratch_dir() / "bad.csv"), ValidationError);
    }
    SUBCASE("bad number diagnostics carry the line") {
        std::ofstream out(scratch_dir() / "badnum.csv");
        out << "A:x,label_config,label_pd\noops,C1,0\n";
        out.close();
        try {
            read_dataset_csv(scratch_dir() / "badnum.csv");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
}

TEST_CASE("dataset: clean twin attach and predictor dropping") {
    const FeederModel feeder = load_feeder(GRIDTID_REFERENCE_FEEDER);
    auto [train, test] = generate_dataset(feeder, 20, 99, 0.8);
    REQUIRE(test.has_clean());

    SUBCASE("clean twin survives a file round trip") {
        const auto obs_path = scratch_dir() / "test.csv";
        const auto clean_path = scratch_dir() / "test_clean.csv";
        write_dataset_csv(test, obs_path);
        write_clean_csv(test, clean_path);

        Dataset back = read_dataset_csv(obs_path);
        const Dataset clean_back = read_dataset_csv(clean_path);
        attach_clean(back, clean_back);
        REQUIRE(back.has_clean());
        for (std::size_t i = 0; i < back.clean.size(); ++i)
            CHECK(bits_equal(back.clean[i].values, test.clean[i].values));
    }
    SUBCASE("drop_predictors removes a unit everywhere") {
        const std::vector<int> idx = unit_indices(test.schema, "DER2");
        const Dataset reduced = drop_predictors(test, idx);
        CHECK(reduced.schema.dimension() == test.schema.dimension() - 3);
        for (const auto& name : reduced.schema.names) CHECK(unit_of(name) != "DER2");
        CHECK(reduced.rows.size() == test.rows.size());
        CHECK(reduced.clean.size() == test.clean.size());
        // Remaining values preserved in order.
        const std::vector<int> keep = unit_indices(test.schema, "SUB");
        for (int j = 0; j < 4; ++j)
            CHECK(reduced.rows[0].obs.values[j] == test.rows[0].obs.values[keep[j]]);
    }
    SUBCASE("mismatched clean twin is rejected") {
        Dataset clean_twin;
        clean_twin.schema = test.schema;
        clean_twin.class_labels = test.class_labels;
        clean_twin.rows.assign(test.rows.begin(), test.rows.end() - 1);
        CHECK_THROWS_AS(attach_clean(test, clean_twin), ValidationError);
    }
}
