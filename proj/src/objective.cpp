#include "go3/objective.hpp"

#include <algorithm>
#include <cmath>

namespace go3 {

double energy_term(const Device& dev, int t, double p, double d_t) {
    const PwlCurve& curve = dev.cost[t];
    // Same tolerance as the evaluator's hard domain check, so a gated call
    // can never throw.
    if (!curve.contains(p, 1e-6)) throw OutOfDomainError(p);
    return d_t * curve.value(std::clamp(p, 0.0, curve.total_width()));
}

SchedulingCosts scheduling_costs(const Device& dev, std::span<const double> u,
                                 std::span<const double> durations) {
    const int nt = static_cast<int>(u.size());
    SchedulingCosts c;
    c.su.assign(nt, 0.0);
    c.sd.assign(nt, 0.0);
    c.on.assign(nt, 0.0);
    for (int t = 0; t < nt; ++t) {
        const double prev = t > 0 ? u[t - 1] : static_cast<double>(dev.u0);
        c.su[t] = dev.startup_cost * std::max(0.0, u[t] - prev);
        c.sd[t] = dev.shutdown_cost * std::max(0.0, prev - u[t]);
        c.on[t] = durations[t] * dev.on_cost * u[t];
    }
    return c;
}

ReserveTermsResult reserve_terms(const Instance& inst, const Solution& sol, int t) {
    const double d_t = inst.intervals[t].duration;
    ReserveTermsResult r;
    r.device_cost.assign(inst.devices.size(), 0.0);
    r.zone_required.assign(inst.zones.size(), 0.0);
    r.zone_shortfall.assign(inst.zones.size(), 0.0);
    r.zone_penalty.assign(inst.zones.size(), 0.0);

    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
        r.device_cost[j] =
            d_t * inst.devices[j].reserve_cost * sol.dev_p_rsv[sol.idx(j, t)];

    for (int n = 0; n < static_cast<int>(inst.zones.size()); ++n) {
        const auto& zone = inst.zones[n];
        // Requirement is sigma times the largest producer dispatch in the
        // zone; an empty producer set requires nothing.
        double max_dispatch = 0.0;
        double provided = 0.0;
        for (int j : zone.members) {
            if (j < 0) continue;
            if (inst.devices[j].is_producer())
                max_dispatch = std::max(max_dispatch, sol.dev_p[sol.idx(j, t)]);
            provided += sol.dev_p_rsv[sol.idx(j, t)];
        }
        r.zone_required[n] = zone.sigma * max_dispatch;
        r.zone_shortfall[n] = std::max(0.0, r.zone_required[n] - provided);
        r.zone_penalty[n] = d_t * zone.shortage_penalty * r.zone_shortfall[n];
    }
    return r;
}

std::pair<double, double> imbalance_penalties(Complex s_it, double d_t,
                                              const PenaltyParams& pen) {
    return {d_t * pen.c_p * std::abs(s_it.real()), d_t * pen.c_q * std::abs(s_it.imag())};
}

double base_overload_penalty(const AcBranch& br, Complex s_fr, Complex s_to, double d_t,
                             double c_s) {
    const double loading = std::max(std::abs(s_fr), std::abs(s_to));
    return d_t * c_s * std::max(0.0, loading - br.s_max);
}

std::vector<double> switching_cost(std::span<const double> u, int u0,
                                   std::span<const double> durations, double c_sw) {
    const int nt = static_cast<int>(u.size());
    std::vector<double> z(nt, 0.0);
    for (int t = 0; t < nt; ++t) {
        const double prev = t > 0 ? u[t - 1] : static_cast<double>(u0);
        z[t] = durations[t] * c_sw * std::abs(u[t] - prev);
    }
    return z;
}

double multi_interval_energy_penalty(const EnergyConstraint& ec, std::span<const double> p,
                                     double c_en) {
    double acc = ec.a0;
    for (const auto& [t, a] : ec.coeffs) acc += a * p[t];
    return c_en * std::max(0.0, acc);
}

void TermTables::resize(int num_t) {
    nt = num_t;
    consumer_value_t.assign(nt, 0.0);
    producer_cost_t.assign(nt, 0.0);
    rsv_cost_t.assign(nt, 0.0);
    su_t.assign(nt, 0.0);
    sd_t.assign(nt, 0.0);
    on_t.assign(nt, 0.0);
    sw_t.assign(nt, 0.0);
    s_base_t.assign(nt, 0.0);
    rsv_zone_t.assign(nt, 0.0);
    p_imb_t.assign(nt, 0.0);
    q_imb_t.assign(nt, 0.0);
    z_en_multi = 0.0;
}

ObjectiveBreakdown assemble_objective(const TermTables& tables, const CtgAggregate& ctg) {
    ObjectiveBreakdown b;
    b.z_time_t.assign(tables.nt, 0.0);
    for (int t = 0; t < tables.nt; ++t) {
        b.z_time_t[t] = tables.consumer_value_t[t] - tables.producer_cost_t[t] -
                        (tables.rsv_cost_t[t] + tables.su_t[t] + tables.sd_t[t] +
                         tables.on_t[t]) -
                        (tables.sw_t[t] + tables.s_base_t[t]) - tables.rsv_zone_t[t] -
                        (tables.p_imb_t[t] + tables.q_imb_t[t]);
        b.z_base += b.z_time_t[t];
        b.energy_value += tables.consumer_value_t[t];
        b.energy_cost += tables.producer_cost_t[t];
        b.z_rsv += tables.rsv_cost_t[t];
        b.z_su += tables.su_t[t];
        b.z_sd += tables.sd_t[t];
        b.z_on += tables.on_t[t];
        b.z_sw += tables.sw_t[t];
        b.z_s += tables.s_base_t[t];
        b.z_rsv_zone += tables.rsv_zone_t[t];
        b.z_p += tables.p_imb_t[t];
        b.z_q += tables.q_imb_t[t];
    }
    b.z_en = tables.z_en_multi;
    b.z_base -= tables.z_en_multi;
    b.z_ctg_worst = ctg.worst_total;
    b.z_ctg_avg = ctg.avg_total;
    b.z_ms = b.z_base - b.z_ctg_worst - b.z_ctg_avg;
    return b;
}

nlohmann::json ObjectiveBreakdown::to_json() const {
    return nlohmann::json{{"z_ms", z_ms},
                          {"z_base", z_base},
                          {"z_ctg_worst", z_ctg_worst},
                          {"z_ctg_avg", z_ctg_avg},
                          {"z_time_t", z_time_t},
                          {"energy_value", energy_value},
                          {"energy_cost", energy_cost},
                          {"z_rsv", z_rsv},
                          {"z_su", z_su},
                          {"z_sd", z_sd},
                          {"z_on", z_on},
                          {"z_sw", z_sw},
                          {"z_s", z_s},
                          {"z_rsv_zone", z_rsv_zone},
                          {"z_p", z_p},
                          {"z_q", z_q},
                          {"z_en", z_en}};
}

}  // namespace go3
