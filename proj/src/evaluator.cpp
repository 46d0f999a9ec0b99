#include "go3/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "go3/acpf.hpp"
#include "go3/contingency.hpp"

namespace go3 {

const char* to_string(FeasibilityClass c) {
    switch (c) {
        case FeasibilityClass::Infeasible: return "infeasible";
        case FeasibilityClass::EvaluationFeasible: return "evaluation-feasible";
        case FeasibilityClass::PhysicallyFeasible: return "physically-feasible";
        case FeasibilityClass::EngineeringFeasible: return "engineering-feasible";
    }
    return "?";
}

namespace {

struct Checker {
    FeasibilityReport rep;

    void violation(const std::string& family, const std::string& entity, int t,
                   double magnitude) {
        rep.hard_violations.push_back({family, entity, t, magnitude});
        auto& worst = rep.max_violation_per_family[family];
        worst = std::max(worst, magnitude);
    }
};

int rounded_binary(Checker& chk, const char* family, const std::string& id, int t,
                   double raw, double tol) {
    const double r = std::round(raw);
    const double drift = std::abs(raw - r);
    if (drift > tol) chk.violation(family, id, t, drift);
    if (r != 0.0 && r != 1.0) {
        chk.violation(family, id, t, std::min(std::abs(raw), std::abs(raw - 1.0)));
        return raw > 0.5 ? 1 : 0;
    }
    return static_cast<int>(r);
}

}  // namespace

FeasibilityReport check_hard_constraints(const Instance& inst, const Solution& sol,
                                         double tol) {
    Checker chk;
    const int nt = inst.num_t();
    const int nd = static_cast<int>(inst.devices.size());
    const int na = static_cast<int>(inst.ac_branches.size());

    // Rounded integer tables, used by every linked constraint below.
    std::vector<int> du(nd * nt), dsu(nd * nt), dsd(nd * nt);
    std::vector<int> bu(na * nt), bsu(na * nt), bsd(na * nt);
    std::vector<int> shu(inst.shunts.size() * nt);

    for (int j = 0; j < nd; ++j) {
        const auto& d = inst.devices[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            du[c] = rounded_binary(chk, "integrality", d.id, t, sol.dev_u[c], tol);
            dsu[c] = rounded_binary(chk, "integrality", d.id, t, sol.dev_u_su[c], tol);
            dsd[c] = rounded_binary(chk, "integrality", d.id, t, sol.dev_u_sd[c], tol);
        }
    }
    for (int j = 0; j < na; ++j) {
        const auto& b = inst.ac_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            bu[c] = rounded_binary(chk, "integrality", b.id, t, sol.ac_u[c], tol);
            bsu[c] = rounded_binary(chk, "integrality", b.id, t, sol.ac_u_su[c], tol);
            bsd[c] = rounded_binary(chk, "integrality", b.id, t, sol.ac_u_sd[c], tol);
        }
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            const double raw = sol.shunt_u[c];
            const double r = std::round(raw);
            if (std::abs(raw - r) > tol)
                chk.violation("integrality", sh.id, t, std::abs(raw - r));
            shu[c] = static_cast<int>(r);
            if (shu[c] < sh.u_min)
                chk.violation("shunt-step-bounds", sh.id, t, sh.u_min - raw);
            if (shu[c] > sh.u_max)
                chk.violation("shunt-step-bounds", sh.id, t, raw - sh.u_max);
        }
    }

    // Indicator consistency and schedule constraints for devices and branches.
    auto check_indicators = [&](const std::string& id, int e, const std::vector<int>& u,
                                const std::vector<int>& usu, const std::vector<int>& usd,
                                int u0) {
        for (int t = 0; t < nt; ++t) {
            const int c = e * nt + t;
            const int prev = t > 0 ? u[c - 1] : u0;
            const int lhs = u[c] - prev;
            const int rhs = usu[c] - usd[c];
            if (lhs != rhs)
                chk.violation("indicator-consistency", id, t, std::abs(lhs - rhs));
            if (usu[c] * usd[c] != 0) chk.violation("indicator-product", id, t, 1.0);
        }
    };

    for (int j = 0; j < nd; ++j) {
        const auto& d = inst.devices[j];
        check_indicators(d.id, j, du, dsu, dsd, d.u0);
        for (int t : d.must_run)
            if (du[j * nt + t] != 1) chk.violation("must-run", d.id, t, 1.0);
        for (int t : d.forced_outage)
            if (du[j * nt + t] != 0) chk.violation("forced-outage", d.id, t, 1.0);
        for (int t = 0; t < nt; ++t) {
            if (dsu[j * nt + t] == 1) {
                int blocked = 0;
                for (int tp : d.dn_window[t]) blocked += dsd[j * nt + tp];
                if (blocked > 0) chk.violation("min-downtime", d.id, t, blocked);
            }
            if (dsd[j * nt + t] == 1) {
                int blocked = 0;
                for (int tp : d.up_window[t]) blocked += dsu[j * nt + tp];
                if (blocked > 0) chk.violation("min-uptime", d.id, t, blocked);
            }
        }
        for (const auto& cw : d.max_startups) {
            int count = 0;
            for (int t : cw.intervals) count += dsu[j * nt + t];
            if (count > cw.limit)
                chk.violation("max-startups", d.id, -1, count - cw.limit);
        }
        for (const auto& cw : d.max_shutdowns) {
            int count = 0;
            for (int t : cw.intervals) count += dsd[j * nt + t];
            if (count > cw.limit)
                chk.violation("max-shutdowns", d.id, -1, count - cw.limit);
        }
    }
    for (int j = 0; j < na; ++j)
        check_indicators(inst.ac_branches[j].id, j, bu, bsu, bsd, inst.ac_branches[j].u0);

    // Continuous device constraints.
    for (int j = 0; j < nd; ++j) {
        const auto& d = inst.devices[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            const int u = du[c];
            const double p = sol.dev_p[c];
            const double q = sol.dev_q[c];
            const double rsv = sol.dev_p_rsv[c];
            const double d_t = inst.intervals[t].duration;

            if (p < d.p_min[t] * u - tol)
                chk.violation("p-bounds", d.id, t, d.p_min[t] * u - p);
            if (p > d.p_max[t] * u + tol)
                chk.violation("p-bounds", d.id, t, p - d.p_max[t] * u);
            if (q < d.q_min[t] * u - tol)
                chk.violation("q-bounds", d.id, t, d.q_min[t] * u - q);
            if (q > d.q_max[t] * u + tol)
                chk.violation("q-bounds", d.id, t, q - d.q_max[t] * u);

            const double prev_p = t > 0 ? sol.dev_p[sol.idx(j, t - 1)] : d.p0;
            const double delta = p - prev_p;
            const double up_lim =
                d_t * (d.ramp_up * (u - dsu[c]) + d.ramp_startup * dsu[c]);
            // Shutdown-rate term gated by the shutdown indicator.
            const double dn_lim = d_t * (d.ramp_down * u + d.ramp_shutdown * dsd[c]);
            if (delta > up_lim + tol) chk.violation("ramp", d.id, t, delta - up_lim);
            if (delta < -dn_lim - tol) chk.violation("ramp", d.id, t, -dn_lim - delta);

            if (rsv < -tol) chk.violation("reserve-bounds", d.id, t, -rsv);
            if (rsv > d.reserve_max[t] * u + tol)
                chk.violation("reserve-bounds", d.id, t, rsv - d.reserve_max[t] * u);
            if (d.is_producer()) {
                if (p + rsv > d.p_max[t] * u + tol)
                    chk.violation("reserve-headroom", d.id, t, p + rsv - d.p_max[t] * u);
            } else {
                if (p - rsv < d.p_min[t] * u - tol)
                    chk.violation("reserve-headroom", d.id, t, d.p_min[t] * u - (p - rsv));
            }

            if (!d.cost[t].contains(p, tol))
                chk.violation("energy-domain", d.id, t,
                              std::max(-p, p - d.cost[t].total_width()));
        }
    }

    // AC branch settings.
    for (int j = 0; j < na; ++j) {
        const auto& b = inst.ac_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            const double tau = sol.ac_tau[c];
            const double phi = sol.ac_phi[c];
            if (tau < b.tau_min - tol) chk.violation("tau-bounds", b.id, t, b.tau_min - tau);
            if (tau > b.tau_max + tol) chk.violation("tau-bounds", b.id, t, tau - b.tau_max);
            if (phi < b.phi_min - tol) chk.violation("phi-bounds", b.id, t, b.phi_min - phi);
            if (phi > b.phi_max + tol) chk.violation("phi-bounds", b.id, t, phi - b.phi_max);
        }
    }

    // DC branch flow bounds; p_to = -p_fr by representation.
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        const auto& b = inst.dc_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int c = sol.idx(j, t);
            const double p = sol.dc_p_fr[c];
            if (std::abs(p) > b.p_max + tol)
                chk.violation("dc-flow-bounds", b.id, t, std::abs(p) - b.p_max);
            const double qf = sol.dc_q_fr[c];
            if (qf < b.q_min_fr - tol) chk.violation("dc-q-bounds", b.id, t, b.q_min_fr - qf);
            if (qf > b.q_max_fr + tol) chk.violation("dc-q-bounds", b.id, t, qf - b.q_max_fr);
            const double qt = sol.dc_q_to[c];
            if (qt < b.q_min_to - tol) chk.violation("dc-q-bounds", b.id, t, b.q_min_to - qt);
            if (qt > b.q_max_to + tol) chk.violation("dc-q-bounds", b.id, t, qt - b.q_max_to);
        }
    }

    // Voltage bounds.
    for (int i = 0; i < inst.num_buses(); ++i) {
        const auto& bus = inst.buses[i];
        for (int t = 0; t < nt; ++t) {
            const double v = sol.bus_v[sol.idx(i, t)];
            if (v < bus.v_min - tol) chk.violation("voltage-bounds", bus.id, t, bus.v_min - v);
            if (v > bus.v_max + tol) chk.violation("voltage-bounds", bus.id, t, v - bus.v_max);
        }
    }

    // Connectivity in the base case and under every contingency.
    ConnectivityReport conn = check_connectivity(inst, sol);
    for (const auto& v : conn.violations) {
        if (v.k < 0)
            chk.violation("connectivity-base", "network", v.t, v.components - 1);
        else
            chk.violation("connectivity-contingency", inst.contingencies[v.k].id, v.t,
                          v.components - 1);
    }

    chk.rep.feasible = chk.rep.hard_violations.empty();
    return chk.rep;
}

Evaluation evaluate(const Instance& inst, const Solution& sol, double tol) {
    Evaluation ev;
    ev.feasibility = check_hard_constraints(inst, sol, tol);
    if (!ev.feasibility.feasible) return ev;

    const int nt = inst.num_t();
    const int nd = static_cast<int>(inst.devices.size());
    const int na = static_cast<int>(inst.ac_branches.size());
    const int nk = static_cast<int>(inst.contingencies.size());

    TermTables tables(nt);
    std::vector<double> durations(nt);
    for (int t = 0; t < nt; ++t) durations[t] = inst.intervals[t].duration;

    bool physical = true;
    bool engineering = true;

    // Per-device terms over the horizon.
    for (int j = 0; j < nd; ++j) {
        const auto& d = inst.devices[j];
        std::vector<double> u(nt), p(nt);
        for (int t = 0; t < nt; ++t) {
            u[t] = std::round(sol.dev_u[sol.idx(j, t)]);
            p[t] = sol.dev_p[sol.idx(j, t)];
        }
        SchedulingCosts sc = scheduling_costs(d, u, durations);
        for (int t = 0; t < nt; ++t) {
            tables.su_t[t] += sc.su[t];
            tables.sd_t[t] += sc.sd[t];
            tables.on_t[t] += sc.on[t];
            const double z = energy_term(d, t, p[t], durations[t]);
            if (d.is_producer())
                tables.producer_cost_t[t] += z;
            else
                tables.consumer_value_t[t] += z;
        }
        for (const auto& ec : d.energy_constraints)
            tables.z_en_multi += multi_interval_energy_penalty(ec, p, inst.penalties.c_en);
    }

    // Per-branch switching costs.
    for (int j = 0; j < na; ++j) {
        std::vector<double> u(nt);
        for (int t = 0; t < nt; ++t) u[t] = std::round(sol.ac_u[sol.idx(j, t)]);
        std::vector<double> z =
            switching_cost(u, inst.ac_branches[j].u0, durations, inst.penalties.c_sw);
        for (int t = 0; t < nt; ++t) tables.sw_t[t] += z[t];
    }

    // Per-interval flows, imbalances, reserves, and contingencies.
    std::vector<std::vector<double>> ctg_pen(nt, std::vector<double>(nk, 0.0));
    for (int t = 0; t < nt; ++t) {
        const double d_t = durations[t];

        for (int j = 0; j < na; ++j) {
            const auto& br = inst.ac_branches[j];
            if (br.from < 0 || br.to < 0) continue;
            const double u = std::round(sol.ac_u[sol.idx(j, t)]);
            const Complex w_fr = complex_voltage(sol.bus_v[sol.idx(br.from, t)],
                                                 sol.bus_theta[sol.idx(br.from, t)]);
            const Complex w_to = complex_voltage(sol.bus_v[sol.idx(br.to, t)],
                                                 sol.bus_theta[sol.idx(br.to, t)]);
            BranchFlowResult f = branch_flow(br, u, sol.ac_tau[sol.idx(j, t)],
                                             sol.ac_phi[sol.idx(j, t)], w_fr, w_to);
            tables.s_base_t[t] +=
                base_overload_penalty(br, f.s_fr, f.s_to, d_t, inst.penalties.c_s);
            if (std::max(std::abs(f.s_fr), std::abs(f.s_to)) > br.s_max + tol)
                engineering = false;
        }

        std::vector<Complex> imb = bus_imbalance(inst, sol, t);
        for (int i = 0; i < inst.num_buses(); ++i) {
            auto [zp, zq] = imbalance_penalties(imb[i], d_t, inst.penalties);
            tables.p_imb_t[t] += zp;
            tables.q_imb_t[t] += zq;
            if (std::abs(imb[i].real()) > tol || std::abs(imb[i].imag()) > tol)
                physical = false;
        }

        ReserveTermsResult rsv = reserve_terms(inst, sol, t);
        for (int j = 0; j < nd; ++j) tables.rsv_cost_t[t] += rsv.device_cost[j];
        for (int n = 0; n < static_cast<int>(inst.zones.size()); ++n) {
            tables.rsv_zone_t[t] += rsv.zone_penalty[n];
            if (rsv.zone_shortfall[n] > tol) engineering = false;
        }

        for (int k = 0; k < nk; ++k) {
            DcSolve dc = solve_dc_contingency(inst, sol, t, k);
            if (dc.status != DcStatus::Ok) {
                // Connectivity was already checked; only a degenerate
                // susceptance pattern lands here. Score it as infeasible.
                ev.feasibility.feasible = false;
                ev.feasibility.hard_violations.push_back(
                    {"contingency-singular", inst.contingencies[k].id, t, 0.0});
                ev.objective.reset();
                ev.score = 0.0;
                ev.cls = FeasibilityClass::Infeasible;
                return ev;
            }
            ctg_pen[t][k] = contingency_overload_penalty(inst, dc.result, sol, t, k);
            // Loading exceeds the contingency rating iff the penalty is
            // positive, so the penalty doubles as the engineering test.
            if (ctg_pen[t][k] > d_t * inst.penalties.c_s * tol) engineering = false;
        }
    }

    CtgAggregate agg = ctg_aggregate(inst, ctg_pen);
    ev.objective = assemble_objective(tables, agg);
    ev.score = std::max(0.0, ev.objective->z_ms);

    if (physical && engineering)
        ev.cls = FeasibilityClass::EngineeringFeasible;
    else if (physical)
        ev.cls = FeasibilityClass::PhysicallyFeasible;
    else
        ev.cls = FeasibilityClass::EvaluationFeasible;
    return ev;
}

double score(const Evaluation& ev) {
    if (!ev.feasibility.feasible || !ev.objective) return 0.0;
    return std::max(0.0, ev.objective->z_ms);
}

nlohmann::json Evaluation::to_json() const {
    nlohmann::json jf;
    nlohmann::json viols = nlohmann::json::array();
    for (const auto& v : feasibility.hard_violations)
        viols.push_back(nlohmann::json{{"family", v.family},
                                       {"entity", v.entity},
                                       {"t", v.t},
                                       {"magnitude", v.magnitude}});
    jf["hard_violations"] = viols;
    jf["max_violation_per_family"] = feasibility.max_violation_per_family;
    jf["feasible"] = feasibility.feasible;

    nlohmann::json j;
    j["feasibility"] = jf;
    if (objective) j["objective"] = objective->to_json();
    j["score"] = score;
    j["feasibility_class"] = to_string(cls);
    return j;
}

}  // namespace go3
