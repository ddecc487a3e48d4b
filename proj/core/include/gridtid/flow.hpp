#pragma once

#include <gridtid/feeder.hpp>

#include <Eigen/Dense>

#include <array>

namespace gridtid {

struct SequencePair {
    double positive = 0.0;
    double negative = 0.0;
};

// Symmetric components of three phase magnitudes under nominal angles
// (0, -120, +120 degrees). Balanced magnitudes give negative == 0.
SequencePair sequence_components(const std::array<double, 3>& v_abc);

struct FlowResult {
    // Voltage magnitude per bus and phase; 0 where the phase is absent
    // or de-energized.
    Eigen::MatrixXd voltage; // buses x 3
    std::array<double, 3> substation_p_phase{};
    std::array<double, 3> substation_q_phase{};
    double substation_p = 0.0; // supplied load + branch losses - DER injection
    double substation_q = 0.0;
    std::vector<bool> load_supplied;       // per load
    std::vector<double> der_injected_p;    // per DER (0 if its bus is dead)

    SequencePair bus_sequence(int bus_index) const {
        return sequence_components({voltage(bus_index, 0), voltage(bus_index, 1),
                                    voltage(bus_index, 2)});
    }
};

// Linearized per-phase drop model. Radial feeders use one
// backward-accumulate / forward-drop pass; a single loop per phase is
// closed by the least-norm circulating flow satisfying the loop voltage
// equation. Voltage-dependent load types are refined once at first-pass
// voltages. Loads without a path to the substation are curtailed; if a
// load would be disconnected even with every protective device closed,
// DisconnectedLoadWithoutPd is thrown.
FlowResult solve_linearized_flow(const FeederModel& feeder, const TopologyCatalog::Entry& topology,
                                 const Eigen::VectorXd& load_scale,
                                 const Eigen::VectorXd& der_p);

// Label-based convenience overload; enumerates the catalog internally.
FlowResult solve_linearized_flow(const FeederModel& feeder, const TopologyLabel& topology,
                                 const Eigen::VectorXd& load_scale,
                                 const Eigen::VectorXd& der_p);

} // namespace gridtid
