#pragma once

// Shared fixtures for the test suites: small hand-built instances and a
// generator of random hard-feasible solutions.

#include <random>
#include <vector>

#include "go3/model.hpp"

namespace go3::testutil {

inline PwlCurve flat_curve(double width, double price) {
    PwlCurve c;
    c.blocks.push_back({width, price});
    return c;
}

inline PwlCurve two_block_curve(double w1, double p1, double w2, double p2) {
    PwlCurve c;
    c.blocks.push_back({w1, p1});
    c.blocks.push_back({w2, p2});
    return c;
}

inline Device make_device(const std::string& id, DeviceKind kind, const std::string& bus,
                          int nt, double p_max, double price) {
    Device d;
    d.id = id;
    d.kind = kind;
    d.bus_id = bus;
    d.p_min.assign(nt, 0.0);
    d.p_max.assign(nt, p_max);
    d.q_min.assign(nt, -0.5 * p_max);
    d.q_max.assign(nt, 0.5 * p_max);
    d.reserve_max.assign(nt, 0.5 * p_max);
    d.reserve_cost = 2.0;
    d.ramp_up = d.ramp_down = 10.0 * p_max;
    d.ramp_startup = d.ramp_shutdown = 10.0 * p_max;
    d.startup_cost = 10.0;
    d.shutdown_cost = 5.0;
    d.on_cost = 1.0;
    for (int t = 0; t < nt; ++t) d.cost.push_back(flat_curve(p_max, price));
    d.u0 = 1;
    d.p0 = 0.0;
    return d;
}

inline AcBranch make_line(const std::string& id, const std::string& a, const std::string& b,
                          Complex y_sr, double s_max = 10.0) {
    AcBranch br;
    br.id = id;
    br.from_id = a;
    br.to_id = b;
    br.y_sr = y_sr;
    br.s_max = s_max;
    br.s_max_ctg = 1.2 * s_max;
    br.u0 = 1;
    return br;
}

// 2-bus toy: one line, one producer at bus a, one consumer at bus b.
inline Instance toy_two_bus(int nt = 1, Complex y_sr = Complex(0.0, -10.0)) {
    Instance inst;
    for (int t = 0; t < nt; ++t) inst.intervals.push_back({t, 1.0});
    inst.buses.push_back({"a", 0.8, 1.2, 0.0});
    inst.buses.push_back({"b", 0.8, 1.2, 0.0});
    inst.devices.push_back(make_device("gen", DeviceKind::Producing, "a", nt, 2.0, 10.0));
    inst.devices.push_back(make_device("load", DeviceKind::Consuming, "b", nt, 1.0, 50.0));
    inst.ac_branches.push_back(make_line("line", "a", "b", y_sr));
    inst.penalties = {1e5, 1e5, 1e3, 100.0, 1e3};
    inst.finalize();
    return inst;
}

// Deterministic uniform double from engine bits.
inline double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
}

// Hard-feasible random solution: schedule honoring forced windows and
// min-up/down (constant per device here for simplicity), powers inside
// commitment bounds and ramp windows, voltages inside bounds, everything else
// within its box. Imbalances are arbitrary, so penalties will be large.
inline Solution random_feasible_solution(const Instance& inst, std::mt19937_64& rng) {
    const int nt = inst.num_t();
    Solution sol = Solution::sized_for(inst);

    for (int i = 0; i < inst.num_buses(); ++i) {
        const auto& bus = inst.buses[i];
        for (int t = 0; t < nt; ++t) {
            sol.bus_v[sol.idx(i, t)] = uniform(rng, bus.v_min, bus.v_max);
            sol.bus_theta[sol.idx(i, t)] = uniform(rng, -0.3, 0.3);
        }
    }
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        // Constant status (forced windows override) never trips min-up/down.
        int status = d.u0;
        if (!d.must_run.empty()) status = 1;
        if (!d.forced_outage.empty()) status = 0;
        double prev_p = d.p0;
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            const int u = d.must_run.count(t) ? 1 : d.forced_outage.count(t) ? 0 : status;
            const int prev_u = t > 0 ? static_cast<int>(sol.dev_u[c - 1]) : d.u0;
            sol.dev_u[c] = u;
            sol.dev_u_su[c] = u > prev_u ? 1 : 0;
            sol.dev_u_sd[c] = u < prev_u ? 1 : 0;
            if (u) {
                const double d_t = inst.intervals[t].duration;
                const double hi = std::min(
                    d.p_max[t],
                    prev_p + d_t * (sol.dev_u_su[c] > 0.5 ? d.ramp_startup : d.ramp_up));
                const double lo = std::max(d.p_min[t], prev_p - d_t * d.ramp_down);
                const double p = lo <= hi ? uniform(rng, lo, hi) : d.p_min[t];
                sol.dev_p[c] = p;
                sol.dev_q[c] = uniform(rng, d.q_min[t], d.q_max[t]);
                const double rsv_cap = std::min(
                    d.reserve_max[t],
                    d.is_producer() ? d.p_max[t] - p : p - d.p_min[t]);
                sol.dev_p_rsv[c] = rsv_cap > 0 ? uniform(rng, 0.0, rsv_cap) : 0.0;
            }
            prev_p = sol.dev_p[c];
        }
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        for (int t = 0; t < nt; ++t)
            sol.shunt_u[sol.idx(j, t)] =
                sh.u_min + static_cast<int>(rng() % (sh.u_max - sh.u_min + 1));
    }
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        const auto& br = inst.ac_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            sol.ac_u[c] = br.u0;  // keep the topology; connectivity stays intact
            sol.ac_tau[c] = uniform(rng, br.tau_min, br.tau_max);
            sol.ac_phi[c] = uniform(rng, br.phi_min, br.phi_max);
        }
    }
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        const auto& br = inst.dc_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            sol.dc_p_fr[c] = uniform(rng, -br.p_max, br.p_max);
            sol.dc_q_fr[c] = uniform(rng, br.q_min_fr, br.q_max_fr);
            sol.dc_q_to[c] = uniform(rng, br.q_min_to, br.q_max_to);
        }
    }
    return sol;
}

}  // namespace go3::testutil
