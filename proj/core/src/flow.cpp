#include <gridtid/flow.hpp>

#include <gridtid/errors.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace gridtid {

SequencePair sequence_components(const std::array<double, 3>& v_abc) {
    using cplx = std::complex<double>;
    const double third = 2.0 * std::numbers::pi / 3.0;
    const cplx rot = std::polar(1.0, third); // 1 at 120 degrees
    const cplx pa = v_abc[0];
    const cplx pb = std::polar(v_abc[1], -third);
    const cplx pc = std::polar(v_abc[2], third);
    SequencePair s;
    s.positive = std::abs(pa + rot * pb + rot * rot * pc) / 3.0;
    s.negative = std::abs(pa + rot * rot * pb + rot * pc) / 3.0;
    return s;
}

namespace {

struct PhaseTree {
    std::vector<bool> in_component;  // per bus
    std::vector<int> parent_bus;     // -1 at root / outside
    std::vector<int> parent_branch;  // branch feeding the bus
    std::vector<int> bfs_order;      // root first
    std::vector<int> loop_branches;  // closed non-tree branches
};

PhaseTree build_phase_tree(const FeederModel& feeder, const std::vector<bool>& branch_closed,
                           int phase, int root) {
    const int nb = static_cast<int>(feeder.buses.size());
    PhaseTree t;
    t.in_component.assign(static_cast<std::size_t>(nb), false);
    t.parent_bus.assign(static_cast<std::size_t>(nb), -1);
    t.parent_branch.assign(static_cast<std::size_t>(nb), -1);

    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(nb));
    for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi) {
        const auto& br = feeder.branches[bi];
        if (!branch_closed[bi] || !has_phase(br.phases, phase)) continue;
        const int u = feeder.bus_index(br.from);
        const int v = feeder.bus_index(br.to);
        adj[static_cast<std::size_t>(u)].emplace_back(v, static_cast<int>(bi));
        adj[static_cast<std::size_t>(v)].emplace_back(u, static_cast<int>(bi));
    }

    if (!has_phase(feeder.buses[static_cast<std::size_t>(root)].phases, phase)) return t;
    t.in_component[static_cast<std::size_t>(root)] = true;
    t.bfs_order.push_back(root);
    std::vector<bool> branch_used(feeder.branches.size(), false);
    for (std::size_t head = 0; head < t.bfs_order.size(); ++head) {
        const int u = t.bfs_order[head];
        for (const auto& [v, bi] : adj[static_cast<std::size_t>(u)]) {
            if (t.in_component[static_cast<std::size_t>(v)]) {
                if (!branch_used[static_cast<std::size_t>(bi)] &&
                    t.parent_branch[static_cast<std::size_t>(u)] != bi) {
                    branch_used[static_cast<std::size_t>(bi)] = true;
                    t.loop_branches.push_back(bi);
                }
                continue;
            }
            t.in_component[static_cast<std::size_t>(v)] = true;
            t.parent_bus[static_cast<std::size_t>(v)] = u;
            t.parent_branch[static_cast<std::size_t>(v)] = bi;
            branch_used[static_cast<std::size_t>(bi)] = true;
            t.bfs_order.push_back(v);
        }
    }
    return t;
}

// Tree path from bus up to the root as (branch, +1 if traversal goes
// child->parent).
std::vector<std::pair<int, int>> path_to_root(const PhaseTree& t, int bus) {
    std::vector<std::pair<int, int>> path;
    while (t.parent_bus[static_cast<std::size_t>(bus)] >= 0) {
        path.emplace_back(t.parent_branch[static_cast<std::size_t>(bus)], bus);
        bus = t.parent_bus[static_cast<std::size_t>(bus)];
    }
    return path;
}

double load_factor(LoadType type, double v) {
    switch (type) {
    case LoadType::constant_power: return 1.0;
    case LoadType::constant_impedance: return v * v;
    case LoadType::constant_current: return v;
    }
    return 1.0;
}

} // namespace

FlowResult solve_linearized_flow(const FeederModel& feeder, const TopologyCatalog::Entry& topology,
                                 const Eigen::VectorXd& load_scale,
                                 const Eigen::VectorXd& der_p) {
    if (load_scale.size() != static_cast<Eigen::Index>(feeder.loads.size()))
        throw ValidationError("flow: load_scale length mismatch");
    if (der_p.size() != static_cast<Eigen::Index>(feeder.ders.size()))
        throw ValidationError("flow: der_p length mismatch");
    if ((load_scale.array() <= 0.0).any())
        throw ValidationError("flow: load scales must be positive");

    const std::vector<int> sw = feeder.switchable_branches();
    if (topology.switch_closed.size() != sw.size() ||
        topology.pd_closed.size() != feeder.protective_devices.size())
        throw ValidationError("flow: topology entry does not match feeder");

    const int nb = static_cast<int>(feeder.buses.size());
    const int root = feeder.bus_index(feeder.substation.bus);
    const double v0 = feeder.substation.source_voltage;

    std::vector<bool> branch_closed(feeder.branches.size(), true);
    for (std::size_t s = 0; s < sw.size(); ++s)
        branch_closed[static_cast<std::size_t>(sw[s])] = topology.switch_closed[s];
    std::vector<bool> closed_with_pds = branch_closed; // devices all closed
    for (std::size_t d = 0; d < feeder.protective_devices.size(); ++d) {
        if (!topology.pd_closed[d]) {
            const int bi = feeder.branch_index(feeder.protective_devices[d].branch_id);
            branch_closed[static_cast<std::size_t>(bi)] = false;
        }
    }

    // Per-phase trees for the energized graph and for the all-devices-closed
    // reference that decides whether a curtailment is attributable to a device.
    std::array<PhaseTree, 3> tree, tree_ref;
    for (int phase = 0; phase < 3; ++phase) {
        tree[static_cast<std::size_t>(phase)] = build_phase_tree(feeder, branch_closed, phase, root);
        tree_ref[static_cast<std::size_t>(phase)] =
            build_phase_tree(feeder, closed_with_pds, phase, root);
        if (tree[static_cast<std::size_t>(phase)].loop_branches.size() > 1)
            throw ValidationError("flow: more than one loop on phase " +
                                  phases_to_string(static_cast<PhaseMask>(1 << phase)));
    }

    FlowResult result;
    result.voltage = Eigen::MatrixXd::Zero(nb, 3);
    result.load_supplied.assign(feeder.loads.size(), false);
    result.der_injected_p.assign(feeder.ders.size(), 0.0);

    for (std::size_t li = 0; li < feeder.loads.size(); ++li) {
        const auto& load = feeder.loads[li];
        const int bus = feeder.bus_index(load.bus);
        const auto& t = tree[static_cast<std::size_t>(load.phase)];
        result.load_supplied[li] = t.in_component[static_cast<std::size_t>(bus)];
        if (!result.load_supplied[li] &&
            !tree_ref[static_cast<std::size_t>(load.phase)]
                 .in_component[static_cast<std::size_t>(bus)])
            throw DisconnectedLoadWithoutPd("flow: load " + std::to_string(li) + " at bus '" +
                                            load.bus + "' islanded with no open device");
    }

    // Nominal voltages for the first pass; refined once for the
    // voltage-dependent load types.
    Eigen::MatrixXd v_prev = Eigen::MatrixXd::Constant(nb, 3, v0);

    for (int sweep = 0; sweep < 2; ++sweep) {
        Eigen::MatrixXd net_p = Eigen::MatrixXd::Zero(nb, 3);
        Eigen::MatrixXd net_q = Eigen::MatrixXd::Zero(nb, 3);

        for (std::size_t li = 0; li < feeder.loads.size(); ++li) {
            if (!result.load_supplied[li]) continue;
            const auto& load = feeder.loads[li];
            const int bus = feeder.bus_index(load.bus);
            const double f =
                load_factor(load.type, v_prev(bus, load.phase) / v0) *
                load_scale[static_cast<Eigen::Index>(li)];
            net_p(bus, load.phase) += load.p * f;
            net_q(bus, load.phase) += load.q * f;
        }
        for (std::size_t di = 0; di < feeder.ders.size(); ++di) {
            const auto& der = feeder.ders[di];
            const int bus = feeder.bus_index(der.bus);
            const PhaseMask mask = feeder.buses[static_cast<std::size_t>(bus)].phases;
            int live_phases = 0;
            for (int phase = 0; phase < 3; ++phase)
                if (has_phase(mask, phase) &&
                    tree[static_cast<std::size_t>(phase)].in_component[static_cast<std::size_t>(bus)])
                    ++live_phases;
            if (live_phases == 0) continue;
            const double p_inj = der_p[static_cast<Eigen::Index>(di)];
            const double q_inj = p_inj * std::tan(std::acos(der.power_factor));
            result.der_injected_p[di] = p_inj;
            for (int phase = 0; phase < 3; ++phase) {
                if (!has_phase(mask, phase) ||
                    !tree[static_cast<std::size_t>(phase)]
                         .in_component[static_cast<std::size_t>(bus)])
                    continue;
                net_p(bus, phase) -= p_inj / live_phases;
                net_q(bus, phase) += q_inj / live_phases; // leading pf absorbs vars
            }
        }

        for (int phase = 0; phase < 3; ++phase) {
            const auto& t = tree[static_cast<std::size_t>(phase)];
            if (t.bfs_order.empty()) continue;

            // Backward accumulation of branch flows (toward the root).
            std::vector<double> flow_p(feeder.branches.size(), 0.0);
            std::vector<double> flow_q(feeder.branches.size(), 0.0);
            std::vector<double> acc_p(static_cast<std::size_t>(nb), 0.0);
            std::vector<double> acc_q(static_cast<std::size_t>(nb), 0.0);
            for (auto it = t.bfs_order.rbegin(); it != t.bfs_order.rend(); ++it) {
                const int bus = *it;
                acc_p[static_cast<std::size_t>(bus)] += net_p(bus, phase);
                acc_q[static_cast<std::size_t>(bus)] += net_q(bus, phase);
                const int pb = t.parent_branch[static_cast<std::size_t>(bus)];
                if (pb < 0) continue;
                flow_p[static_cast<std::size_t>(pb)] = acc_p[static_cast<std::size_t>(bus)];
                flow_q[static_cast<std::size_t>(pb)] = acc_q[static_cast<std::size_t>(bus)];
                const int parent = t.parent_bus[static_cast<std::size_t>(bus)];
                acc_p[static_cast<std::size_t>(parent)] += acc_p[static_cast<std::size_t>(bus)];
                acc_q[static_cast<std::size_t>(parent)] += acc_q[static_cast<std::size_t>(bus)];
            }

            // Close one loop, if present, with the least-norm circulating
            // flow satisfying the loop voltage equation.
            for (int tie : t.loop_branches) {
                const auto& tie_br = feeder.branches[static_cast<std::size_t>(tie)];
                const int u = feeder.bus_index(tie_br.from);
                const int v = feeder.bus_index(tie_br.to);
                // Cycle: u -> v across the tie, back v -> u through the
                // tree. sigma is +1 when the travel direction matches the
                // branch's flow-positive direction (parent -> child for
                // tree branches, from -> to for the tie). The common tail
                // of the two root paths appears with opposite signs and is
                // removed so the sums run over the true cycle only.
                std::vector<std::pair<int, int>> cycle; // (branch, sigma)
                cycle.emplace_back(tie, +1);
                std::vector<int> sigma_of(feeder.branches.size(), 0);
                for (const auto& [bi, child] : path_to_root(t, v)) {
                    (void)child;
                    sigma_of[static_cast<std::size_t>(bi)] -= 1; // child -> parent
                }
                for (const auto& [bi, child] : path_to_root(t, u)) {
                    (void)child;
                    sigma_of[static_cast<std::size_t>(bi)] += 1; // parent -> child
                }
                for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi)
                    if (sigma_of[bi] != 0) cycle.emplace_back(static_cast<int>(bi), sigma_of[bi]);

                double mismatch = 0.0, r_sum = 0.0, x_sum = 0.0;
                for (const auto& [bi, sigma] : cycle) {
                    const auto& br = feeder.branches[static_cast<std::size_t>(bi)];
                    mismatch += sigma * (br.r * flow_p[static_cast<std::size_t>(bi)] +
                                         br.x * flow_q[static_cast<std::size_t>(bi)]);
                    r_sum += br.r;
                    x_sum += br.x;
                }
                const double denom = r_sum * r_sum + x_sum * x_sum;
                if (denom == 0.0) continue;
                const double fp = -mismatch * r_sum / denom;
                const double fq = -mismatch * x_sum / denom;
                for (const auto& [bi, sigma] : cycle) {
                    flow_p[static_cast<std::size_t>(bi)] += sigma * fp;
                    flow_q[static_cast<std::size_t>(bi)] += sigma * fq;
                }
            }

            // Substation totals: supplied consumption plus series losses.
            double p_total = acc_p[static_cast<std::size_t>(root)];
            double q_total = acc_q[static_cast<std::size_t>(root)];
            for (std::size_t bi = 0; bi < feeder.branches.size(); ++bi) {
                const auto& br = feeder.branches[bi];
                if (!branch_closed[bi] || !has_phase(br.phases, phase)) continue;
                const double s2 = flow_p[bi] * flow_p[bi] + flow_q[bi] * flow_q[bi];
                p_total += br.r * s2 / (v0 * v0);
                q_total += br.x * s2 / (v0 * v0);
            }
            result.substation_p_phase[static_cast<std::size_t>(phase)] = p_total;
            result.substation_q_phase[static_cast<std::size_t>(phase)] = q_total;

            // Forward sweep of voltage drops from the source equivalent.
            result.voltage(root, phase) =
                v0 - (feeder.substation.source_r * p_total +
                      feeder.substation.source_x * q_total) /
                         v0;
            for (int bus : t.bfs_order) {
                const int pb = t.parent_branch[static_cast<std::size_t>(bus)];
                if (pb < 0) continue;
                const auto& br = feeder.branches[static_cast<std::size_t>(pb)];
                const int parent = t.parent_bus[static_cast<std::size_t>(bus)];
                result.voltage(bus, phase) =
                    result.voltage(parent, phase) -
                    (br.r * flow_p[static_cast<std::size_t>(pb)] +
                     br.x * flow_q[static_cast<std::size_t>(pb)]) /
                        v0;
            }
        }

        v_prev = result.voltage;
        // Dead phases keep the nominal voltage out of the load refresh.
        for (int bus = 0; bus < nb; ++bus)
            for (int phase = 0; phase < 3; ++phase)
                if (!tree[static_cast<std::size_t>(phase)].in_component[static_cast<std::size_t>(bus)])
                    v_prev(bus, phase) = v0;
    }

    result.substation_p = result.substation_p_phase[0] + result.substation_p_phase[1] +
                          result.substation_p_phase[2];
    result.substation_q = result.substation_q_phase[0] + result.substation_q_phase[1] +
                          result.substation_q_phase[2];
    return result;
}

FlowResult solve_linearized_flow(const FeederModel& feeder, const TopologyLabel& topology,
                                 const Eigen::VectorXd& load_scale,
                                 const Eigen::VectorXd& der_p) {
    const TopologyCatalog catalog = enumerate_topologies(feeder);
    return solve_linearized_flow(feeder, catalog.find(topology), load_scale, der_p);
}

} // namespace gridtid
