#include <gridtid/simgen.hpp>

#include <gridtid/rng.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace gridtid {

PredictorSchema schema_for(const FeederModel& feeder) {
    validate_feeder(feeder);
    PredictorSchema schema;
    if (!feeder.substation.metered)
        throw FeederSpecError("substation must be metered");
    schema.names = {"SUB:P", "SUB:Q", "SUB:V+", "SUB:V-"};
    for (const auto& der : feeder.ders) {
        if (!der.metered) continue;
        if (der.id == "SUB") throw FeederSpecError("DER id 'SUB' collides with the substation unit");
        schema.names.push_back(der.id + ":P");
        schema.names.push_back(der.id + ":V+");
        schema.names.push_back(der.id + ":V-");
    }
    validate_schema(schema);
    return schema;
}

Observation measurements_from_flow(const FeederModel& feeder, const PredictorSchema& schema,
                                   const FlowResult& flow) {
    Eigen::VectorXd v(schema.dimension());
    int j = 0;
    const int sub = feeder.bus_index(feeder.substation.bus);
    const SequencePair sub_seq = flow.bus_sequence(sub);
    v[j++] = flow.substation_p;
    v[j++] = flow.substation_q;
    v[j++] = sub_seq.positive;
    v[j++] = sub_seq.negative;
    for (std::size_t d = 0; d < feeder.ders.size(); ++d) {
        if (!feeder.ders[d].metered) continue;
        const SequencePair seq = flow.bus_sequence(feeder.bus_index(feeder.ders[d].bus));
        v[j++] = flow.der_injected_p[d];
        v[j++] = seq.positive;
        v[j++] = seq.negative;
    }
    if (j != schema.dimension())
        throw SchemaMismatch("measurement assembly does not match schema");
    return Observation::complete_of(std::move(v), schema);
}

Scenario sample_scenario(const FeederModel& feeder, const TopologyCatalog& catalog,
                         int topology_index, int sample_index, std::uint64_t seed,
                         const SimOptions& options) {
    if (topology_index < 0 || topology_index >= static_cast<int>(catalog.entries.size()))
        throw ValidationError("sample_scenario: topology index out of range");
    const auto& entry = catalog.entries[static_cast<std::size_t>(topology_index)];
    const PredictorSchema schema = schema_for(feeder);

    std::mt19937_64 rng = sub_stream(seed, static_cast<std::uint64_t>(topology_index),
                                     static_cast<std::uint64_t>(sample_index));
    std::normal_distribution<double> load_noise(options.load_scale_mean, options.load_scale_std);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    Scenario sc;
    sc.topology = entry.label;

    sc.load_scale.resize(static_cast<Eigen::Index>(feeder.loads.size()));
    for (Eigen::Index i = 0; i < sc.load_scale.size(); ++i) {
        double s = load_noise(rng);
        while (s < options.load_scale_floor) s = load_noise(rng); // truncation
        sc.load_scale[i] = s;
    }

    sc.der_p.resize(static_cast<Eigen::Index>(feeder.ders.size()));
    for (std::size_t d = 0; d < feeder.ders.size(); ++d) {
        const double upper = 2.0 * feeder.ders[d].mean_p;
        if (upper <= 0.0) {
            sc.der_p[static_cast<Eigen::Index>(d)] = 0.0;
            continue;
        }
        std::uniform_real_distribution<double> gen(0.0, upper);
        sc.der_p[static_cast<Eigen::Index>(d)] = gen(rng);
    }

    const FlowResult flow = solve_linearized_flow(feeder, entry, sc.load_scale, sc.der_p);
    sc.clean_observation = measurements_from_flow(feeder, schema, flow);

    sc.observation = sc.clean_observation;
    for (Eigen::Index i = 0; i < sc.observation.values.size(); ++i) {
        const double eps = unit_normal(rng);
        sc.observation.values[i] *= 1.0 + options.noise_std * eps;
    }
    return sc;
}

std::pair<Dataset, Dataset> generate_dataset(const FeederModel& feeder, int n_per_topology,
                                             std::uint64_t seed, double split_fraction,
                                             const SimOptions& options) {
    if (n_per_topology < 10)
        throw ValidationError("generate_dataset: need at least 10 scenarios per topology");
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0))
        throw ValidationError("generate_dataset: split fraction must lie in (0,1)");

    const TopologyCatalog catalog = enumerate_topologies(feeder);
    const PredictorSchema schema = schema_for(feeder);

    std::vector<TopologyLabel> enumeration = catalog.labels();
    std::sort(enumeration.begin(), enumeration.end());

    Dataset train, test;
    train.schema = test.schema = schema;
    train.class_labels = test.class_labels = enumeration;

    const int n_train =
        static_cast<int>(std::llround(split_fraction * static_cast<double>(n_per_topology)));
    if (n_train <= 0 || n_train >= n_per_topology)
        throw ValidationError("generate_dataset: split leaves an empty side");

    for (int t = 0; t < static_cast<int>(catalog.entries.size()); ++t) {
        for (int i = 0; i < n_per_topology; ++i) {
            Scenario sc = sample_scenario(feeder, catalog, t, i, seed, options);
            if (i < n_train) {
                train.rows.push_back({std::move(sc.observation), sc.topology});
            } else {
                test.rows.push_back({std::move(sc.observation), sc.topology});
                test.clean.push_back(std::move(sc.clean_observation));
            }
        }
    }
    return {std::move(train), std::move(test)};
}

} // namespace gridtid
