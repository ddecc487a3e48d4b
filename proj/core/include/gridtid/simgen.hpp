#pragma once

#include <gridtid/dataset.hpp>
#include <gridtid/feeder.hpp>
#include <gridtid/flow.hpp>

#include <cstdint>
#include <utility>

namespace gridtid {

struct SimOptions {
    double noise_std = 0.01;      // multiplicative measurement noise
    double load_scale_mean = 1.0; // Gaussian load multiplier
    double load_scale_std = 0.3;
    double load_scale_floor = 0.05; // truncation point
};

struct Scenario {
    TopologyLabel topology;
    Eigen::VectorXd load_scale;
    Eigen::VectorXd der_p;
    Observation observation;       // noisy measurements
    Observation clean_observation; // noise-free mirror
};

// Measurement layout for a feeder: substation (P, Q, V+, V-) followed by
// each metered DER (P, V+, V-), names "UNIT:QUANTITY".
PredictorSchema schema_for(const FeederModel& feeder);

// Noise-free measurement vector for a solved flow.
Observation measurements_from_flow(const FeederModel& feeder, const PredictorSchema& schema,
                                   const FlowResult& flow);

// One Monte Carlo scenario on a fully derived RNG stream
// (seed, topology index, sample index): truncated-Gaussian load scales,
// uniform DER generation over [0, 2*mean], linearized flow, and
// multiplicative Gaussian measurement noise.
Scenario sample_scenario(const FeederModel& feeder, const TopologyCatalog& catalog,
                         int topology_index, int sample_index, std::uint64_t seed,
                         const SimOptions& options = {});

// n_per_topology scenarios per catalog entry, stratified split into
// train/test at split_fraction. The test set keeps its clean twin.
std::pair<Dataset, Dataset> generate_dataset(const FeederModel& feeder, int n_per_topology,
                                             std::uint64_t seed, double split_fraction,
                                             const SimOptions& options = {});

} // namespace gridtid
