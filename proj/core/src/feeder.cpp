#include <gridtid/feeder.hpp>

#include <gridtid/errors.hpp>
#include <gridtid/numeric.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace gridtid {

using nlohmann::json;

PhaseMask parse_phases(const std::string& s) {
    PhaseMask m = 0;
    for (char c : s) {
        switch (c) {
        case 'a': m |= kPhaseA; break;
        case 'b': m |= kPhaseB; break;
        case 'c': m |= kPhaseC; break;
        default: throw FeederSpecError("invalid phase character '" + std::string(1, c) + "'");
        }
    }
    if (m == 0) throw FeederSpecError("empty phase set");
    return m;
}

std::string phases_to_string(PhaseMask m) {
    std::string s;
    if (m & kPhaseA) s += 'a';
    if (m & kPhaseB) s += 'b';
    if (m & kPhaseC) s += 'c';
    return s;
}

LoadType parse_load_type(const std::string& s) {
    if (s == "constant_power") return LoadType::constant_power;
    if (s == "constant_impedance") return LoadType::constant_impedance;
    if (s == "constant_current") return LoadType::constant_current;
    throw FeederSpecError("unknown load type '" + s + "'");
}

std::string load_type_to_string(LoadType t) {
    switch (t) {
    case LoadType::constant_power: return "constant_power";
    case LoadType::constant_impedance: return "constant_impedance";
    case LoadType::constant_current: return "constant_current";
    }
    return "constant_power";
}

int FeederModel::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

int FeederModel::branch_index(const std::string& id) const {
    for (std::size_t i = 0; i < branches.size(); ++i)
        if (branches[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<int> FeederModel::switchable_branches() const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < branches.size(); ++i)
        if (branches[i].switchable) idx.push_back(static_cast<int>(i));
    return idx;
}

void validate_feeder(const FeederModel& feeder) {
    if (feeder.format_version < 1) throw FeederSpecError("format_version must be >= 1");
    if (feeder.buses.empty()) throw FeederSpecError("feeder has no buses");

    std::set<std::string> bus_ids;
    for (const auto& bus : feeder.buses) {
        if (bus.id.empty() || bus.id.find(':') != std::string::npos)
            throw FeederSpecError("bad bus id '" + bus.id + "'");
        if (!bus_ids.insert(bus.id).second)
            throw FeederSpecError("duplicate bus id '" + bus.id + "'");
        if (bus.phases == 0) throw FeederSpecError("bus '" + bus.id + "' has no phases");
    }

    std::set<std::string> branch_ids, switch_ids;
    for (const auto& br : feeder.branches) {
        if (br.id.empty() || !branch_ids.insert(br.id).second)
            throw FeederSpecError("duplicate or empty branch id '" + br.id + "'");
        const int fi = feeder.bus_index(br.from);
        const int ti = feeder.bus_index(br.to);
        if (fi < 0) throw FeederSpecError("branch '" + br.id + "': unknown bus '" + br.from + "'");
        if (ti < 0) throw FeederSpecError("branch '" + br.id + "': unknown bus '" + br.to + "'");
        if (br.from == br.to) throw FeederSpecError("branch '" + br.id + "' is a self-loop");
        if (br.r < 0.0 || br.x < 0.0)
            throw FeederSpecError("branch '" + br.id + "': negative impedance");
        if (br.r == 0.0 && br.x == 0.0)
            throw FeederSpecError("branch '" + br.id + "': r and x are both zero");
        const PhaseMask endpoint_phases =
            feeder.buses[static_cast<std::size_t>(fi)].phases &
            feeder.buses[static_cast<std::size_t>(ti)].phases;
        if ((br.phases & ~endpoint_phases) != 0)
            throw FeederSpecError("branch '" + br.id + "': phases not present at both endpoints");
        if (br.switchable) {
            if (br.switch_id.empty())
                throw FeederSpecError("branch '" + br.id + "': switchable without switch_id");
            if (!switch_ids.insert(br.switch_id).second)
                throw FeederSpecError("duplicate switch_id '" + br.switch_id + "'");
        }
    }

    std::set<std::string> pd_ids;
    for (const auto& pd : feeder.protective_devices) {
        if (pd.pd_id.empty() || !pd_ids.insert(pd.pd_id).second)
            throw FeederSpecError("duplicate or empty pd_id '" + pd.pd_id + "'");
        const int bi = feeder.branch_index(pd.branch_id);
        if (bi < 0)
            throw FeederSpecError("protective device '" + pd.pd_id + "': unknown branch '" +
                                  pd.branch_id + "'");
        if (feeder.branches[static_cast<std::size_t>(bi)].switchable)
            throw FeederSpecError("protective device '" + pd.pd_id +
                                  "' placed on switchable branch '" + pd.branch_id + "'");
    }

    for (std::size_t i = 0; i < feeder.loads.size(); ++i) {
        const auto& load = feeder.loads[i];
        const int bi = feeder.bus_index(load.bus);
        if (bi < 0)
            throw FeederSpecError("load " + std::to_string(i) + ": unknown bus '" + load.bus + "'");
        if (load.phase < 0 || load.phase > 2)
            throw FeederSpecError("load " + std::to_string(i) + ": bad phase");
        if (!has_phase(feeder.buses[static_cast<std::size_t>(bi)].phases, load.phase))
            throw FeederSpecError("load " + std::to_string(i) + ": phase absent at bus '" +
                                  load.bus + "'");
        if (load.p < 0.0)
            throw FeederSpecError("load " + std::to_string(i) + ": negative active power");
    }

    std::set<std::string> der_ids;
    for (const auto& der : feeder.ders) {
        if (der.id.empty() || der.id.find(':') != std::string::npos ||
            !der_ids.insert(der.id).second)
            throw FeederSpecError("duplicate or bad DER id '" + der.id + "'");
        const int bi = feeder.bus_index(der.bus);
        if (bi < 0) throw FeederSpecError("DER '" + der.id + "': unknown bus '" + der.bus + "'");
        if (der.mean_p < 0.0) throw FeederSpecError("DER '" + der.id + "': negative mean power");
        if (!(der.power_factor > 0.0) || der.power_factor > 1.0)
            throw FeederSpecError("DER '" + der.id + "': power factor outside (0,1]");
        if (der.metered &&
            feeder.buses[static_cast<std::size_t>(bi)].phases != kAllPhases)
            throw FeederSpecError("DER '" + der.id + "': metered unit needs a three-phase bus");
    }

    const int sbi = feeder.bus_index(feeder.substation.bus);
    if (sbi < 0)
        throw FeederSpecError("substation: unknown bus '" + feeder.substation.bus + "'");
    if (feeder.buses[static_cast<std::size_t>(sbi)].phases != kAllPhases)
        throw FeederSpecError("substation bus must carry all three phases");
    if (!(feeder.substation.source_voltage > 0.0))
        throw FeederSpecError("substation: source_voltage must be positive");
    if (feeder.substation.source_r < 0.0 || feeder.substation.source_x < 0.0)
        throw FeederSpecError("substation: negative source impedance");
}

namespace {

json must_get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw FeederSpecError(where + ": missing field '" + key + "'");
    return j.at(key);
}

FeederModel feeder_from_json(const json& j) {
    FeederModel f;
    f.format_version = must_get(j, "format_version", "feeder").get<int>();
    f.name = j.value("name", std::string{});

    for (const auto& jb : must_get(j, "buses", "feeder")) {
        Bus b;
        b.id = must_get(jb, "id", "bus").get<std::string>();
        b.phases = parse_phases(must_get(jb, "phases", "bus '" + b.id + "'").get<std::string>());
        f.buses.push_back(std::move(b));
    }
    for (const auto& jb : must_get(j, "branches", "feeder")) {
        Branch br;
        br.id = must_get(jb, "id", "branch").get<std::string>();
        const std::string where = "branch '" + br.id + "'";
        br.from = must_get(jb, "from", where).get<std::string>();
        br.to = must_get(jb, "to", where).get<std::string>();
        br.phases = parse_phases(must_get(jb, "phases", where).get<std::string>());
        br.r = must_get(jb, "r", where).get<double>();
        br.x = must_get(jb, "x", where).get<double>();
        br.switchable = jb.value("switchable", false);
        br.switch_id = jb.value("switch_id", std::string{});
        f.branches.push_back(std::move(br));
    }
    for (const auto& jp : j.value("protective_devices", json::array())) {
        ProtectiveDevice pd;
        pd.pd_id = must_get(jp, "pd_id", "protective device").get<std::string>();
        pd.branch_id = must_get(jp, "branch", "protective device '" + pd.pd_id + "'")
                           .get<std::string>();
        f.protective_devices.push_back(std::move(pd));
    }
    for (const auto& jl : j.value("loads", json::array())) {
        Load load;
        load.bus = must_get(jl, "bus", "load").get<std::string>();
        const std::string where = "load at bus '" + load.bus + "'";
        const std::string phase = must_get(jl, "phase", where).get<std::string>();
        if (phase.size() != 1) throw FeederSpecError(where + ": phase must be one of a/b/c");
        load.phase = phase[0] - 'a';
        load.p = must_get(jl, "p", where).get<double>();
        load.q = must_get(jl, "q", where).get<double>();
        load.type = parse_load_type(must_get(jl, "type", where).get<std::string>());
        f.loads.push_back(std::move(load));
    }
    for (const auto& jd : j.value("ders", json::array())) {
        Der der;
        der.id = must_get(jd, "id", "der").get<std::string>();
        const std::string where = "DER '" + der.id + "'";
        der.bus = must_get(jd, "bus", where).get<std::string>();
        der.mean_p = must_get(jd, "mean_p", where).get<double>();
        der.power_factor = jd.value("power_factor", 0.95);
        der.metered = jd.value("metered", true);
        f.ders.push_back(std::move(der));
    }
    const json js = must_get(j, "substation", "feeder");
    f.substation.bus = must_get(js, "bus", "substation").get<std::string>();
    f.substation.metered = js.value("metered", true);
    f.substation.source_voltage = must_get(js, "source_voltage", "substation").get<double>();
    f.substation.source_r = js.value("source_r", 0.0);
    f.substation.source_x = js.value("source_x", 0.0);

    validate_feeder(f);
    return f;
}

} // namespace

FeederModel parse_feeder(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FeederSpecError(std::string("feeder JSON parse error: ") + e.what());
    }
    try {
        return feeder_from_json(j);
    } catch (const json::exception& e) {
        throw FeederSpecError(std::string("feeder JSON field error: ") + e.what());
    }
}

FeederModel load_feeder(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feeder file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_feeder(ss.str());
}

std::uint64_t feeder_file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feeder file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

namespace {

// Union-find connectivity of closed branches on one phase.
struct PhaseGraph {
    std::vector<int> parent;

    explicit PhaseGraph(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// Every load reachable from the substation on its own phase?
bool all_loads_supplied(const FeederModel& feeder, const std::vector<bool>& branch_closed) {
    const int nb = static_cast<int>(feeder.buses.size());
    const int sub = feeder.bus_index(feeder.substation.bus);
    for (int phase = 0; phase < 3; ++phase) {
        PhaseGraph g(static_cast<std::size_t>(nb));
        for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi) {
            const auto& br = feeder.branches[bi];
            if (!branch_closed[bi] || !has_phase(br.phases, phase)) continue;
            g.unite(feeder.bus_index(br.from), feeder.bus_index(br.to));
        }
        for (const auto& load : feeder.loads) {
            if (load.phase != phase) continue;
            if (g.find(feeder.bus_index(load.bus)) != g.find(sub)) return false;
        }
    }
    return true;
}

// Cycle rank of the one-line graph restricted to the substation component.
int one_line_cycle_rank(const FeederModel& feeder, const std::vector<bool>& branch_closed) {
    const int nb = static_cast<int>(feeder.buses.size());
    PhaseGraph g(static_cast<std::size_t>(nb));
    int edges_in_component = 0;
    for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi) {
        if (!branch_closed[bi]) continue;
        g.unite(feeder.bus_index(feeder.branches[bi].from),
                feeder.bus_index(feeder.branches[bi].to));
    }
    const int sub_root = g.find(feeder.bus_index(feeder.substation.bus));
    int vertices_in_component = 0;
    for (int i = 0; i < nb; ++i)
        if (g.find(i) == sub_root) ++vertices_in_component;
    for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi) {
        if (!branch_closed[bi]) continue;
        if (g.find(feeder.bus_index(feeder.branches[bi].from)) == sub_root)
            ++edges_in_component;
    }
    return edges_in_component - vertices_in_component + 1;
}

} // namespace

std::vector<TopologyLabel> TopologyCatalog::labels() const {
    std::vector<TopologyLabel> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.label);
    return out;
}

const TopologyCatalog::Entry& TopologyCatalog::find(const TopologyLabel& label) const {
    for (const auto& e : entries)
        if (e.label == label) return e;
    throw ValidationError("topology " + label.str() + " not in catalog");
}

TopologyCatalog enumerate_topologies(const FeederModel& feeder) {
    validate_feeder(feeder);
    const std::vector<int> sw = feeder.switchable_branches();
    const int ns = static_cast<int>(sw.size());
    const int np = static_cast<int>(feeder.protective_devices.size());
    if (ns > 16 || np > 16) throw FeederSpecError("too many switches or protective devices");

    TopologyCatalog cat;
    for (int i : sw) cat.switch_ids.push_back(feeder.branches[static_cast<std::size_t>(i)].switch_id);
    for (const auto& pd : feeder.protective_devices) cat.pd_ids.push_back(pd.pd_id);

    // Admissible switch configurations, keyed by open-pattern bit string
    // ('0' closed, '1' open) and sorted for a deterministic C1..Cm naming.
    std::vector<std::pair<std::string, std::vector<bool>>> configs;
    for (unsigned pattern = 0; pattern < (1u << ns); ++pattern) {
        std::vector<bool> branch_closed(feeder.branches.size(), true);
        std::string open_bits(static_cast<std::size_t>(ns), '0');
        for (int s = 0; s < ns; ++s) {
            const bool open = (pattern >> s) & 1;
            if (open) open_bits[static_cast<std::size_t>(s)] = '1';
            branch_closed[static_cast<std::size_t>(sw[static_cast<std::size_t>(s)])] = !open;
        }
        if (!all_loads_supplied(feeder, branch_closed)) continue;
        if (one_line_cycle_rank(feeder, branch_closed) > 1) continue;
        std::vector<bool> switch_closed;
        for (int s = 0; s < ns; ++s)
            switch_closed.push_back(open_bits[static_cast<std::size_t>(s)] == '0');
        configs.emplace_back(open_bits, std::move(switch_closed));
    }
    std::sort(configs.begin(), configs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (configs.empty()) throw NoValidTopology("no switch configuration supplies every load");

    for (std::size_t c = 0; c < configs.size(); ++c) {
        std::vector<bool> branch_closed(feeder.branches.size(), true);
        for (int s = 0; s < ns; ++s)
            branch_closed[static_cast<std::size_t>(sw[static_cast<std::size_t>(s)])] =
                configs[c].second[static_cast<std::size_t>(s)];
        const bool meshed = one_line_cycle_rank(feeder, branch_closed) == 1;

        for (unsigned pd_pattern = 0; pd_pattern < (1u << np); ++pd_pattern) {
            TopologyCatalog::Entry e;
            e.label.switch_config = "C" + std::to_string(c + 1);
            e.label.pd_status.assign(static_cast<std::size_t>(np), '0');
            e.switch_closed = configs[c].second;
            e.pd_closed.assign(static_cast<std::size_t>(np), true);
            for (int d = 0; d < np; ++d) {
                if ((pd_pattern >> (np - 1 - d)) & 1) {
                    e.label.pd_status[static_cast<std::size_t>(d)] = '1';
                    e.pd_closed[static_cast<std::size_t>(d)] = false;
                }
            }
            e.weakly_meshed = meshed;
            cat.entries.push_back(std::move(e));
        }
    }
    return cat;
}

FeederModel with_load_type(FeederModel feeder, LoadType type) {
    for (auto& load : feeder.loads) load.type = type;
    return feeder;
}

FeederModel with_loading(FeederModel feeder, double p_mult, double q_mult) {
    if (p_mult <= 0.0 || q_mult <= 0.0)
        throw FeederSpecError("loading multipliers must be positive");
    for (auto& load : feeder.loads) {
        load.p *= p_mult;
        load.q *= q_mult;
    }
    return feeder;
}

} // namespace gridtid
