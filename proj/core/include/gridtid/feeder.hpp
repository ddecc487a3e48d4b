#pragma once

#include <gridtid/types.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gridtid {

// Phase mask bits: a=1, b=2, c=4.
using PhaseMask = std::uint8_t;
constexpr PhaseMask kPhaseA = 1, kPhaseB = 2, kPhaseC = 4, kAllPhases = 7;

inline bool has_phase(PhaseMask m, int phase) { return (m >> phase) & 1; }
inline int phase_count(PhaseMask m) { return ((m & 1) != 0) + ((m & 2) != 0) + ((m & 4) != 0); }
PhaseMask parse_phases(const std::string& s); // "abc", "a", ...
std::string phases_to_string(PhaseMask m);

enum class LoadType { constant_power, constant_impedance, constant_current };
LoadType parse_load_type(const std::string& s);
std::string load_type_to_string(LoadType t);

struct Bus {
    std::string id;
    PhaseMask phases = kAllPhases;
};

struct Branch {
    std::string id;
    std::string from;
    std::string to;
    PhaseMask phases = kAllPhases;
    double r = 0.0; // per-phase series resistance, per unit
    double x = 0.0; // per-phase series reactance, per unit
    bool switchable = false;
    std::string switch_id; // non-empty iff switchable
};

struct ProtectiveDevice {
    std::string pd_id;
    std::string branch_id;
};

struct Load {
    std::string bus;
    int phase = 0; // 0=a, 1=b, 2=c
    double p = 0.0;
    double q = 0.0;
    LoadType type = LoadType::constant_power;
};

struct Der {
    std::string id;
    std::string bus;
    double mean_p = 0.0;
    double power_factor = 0.95; // leading; reactive absorption q = p*tan(acos(pf))
    bool metered = true;
};

struct Substation {
    std::string bus;
    bool metered = true;
    // Upstream grid equivalent behind the metered MV bus; gives the
    // substation voltage a load-dependent (and unbalance-dependent) value.
    double source_voltage = 1.0;
    double source_r = 0.0;
    double source_x = 0.0;
};

struct FeederModel {
    int format_version = 1;
    std::string name;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<ProtectiveDevice> protective_devices;
    std::vector<Load> loads;
    std::vector<Der> ders;
    Substation substation;

    int bus_index(const std::string& id) const;    // -1 if absent
    int branch_index(const std::string& id) const; // -1 if absent
    std::vector<int> switchable_branches() const;  // declaration order
};

// Structural validation; throws FeederSpecError naming the offending field.
void validate_feeder(const FeederModel& feeder);

FeederModel load_feeder(const std::filesystem::path& path);
FeederModel parse_feeder(const std::string& json_text);

// FNV-1a of the raw file bytes; recorded in run metadata.
std::uint64_t feeder_file_hash(const std::filesystem::path& path);

// Enumerated topology: which switchable branches and protective devices
// are closed. Labels use "C<i>" configurations in deterministic order and
// pd bit strings ('0' close, '1' open) over devices in declaration order.
struct TopologyCatalog {
    struct Entry {
        TopologyLabel label;
        std::vector<bool> switch_closed; // per switchable branch
        std::vector<bool> pd_closed;     // per protective device
        bool weakly_meshed = false;      // one-line cycle rank 1
    };
    std::vector<std::string> switch_ids;
    std::vector<std::string> pd_ids;
    std::vector<Entry> entries;

    std::vector<TopologyLabel> labels() const;
    const Entry& find(const TopologyLabel& label) const;
};

// Cartesian product of admissible switch configurations (every load
// supplied with all devices closed; one-line cycle rank <= 1) with all
// protective-device status vectors.
TopologyCatalog enumerate_topologies(const FeederModel& feeder);

// Simulator presets for the sensitivity studies.
FeederModel with_load_type(FeederModel feeder, LoadType type);
FeederModel with_loading(FeederModel feeder, double p_mult, double q_mult);

} // namespace gridtid
