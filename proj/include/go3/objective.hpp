#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "go3/contingency.hpp"
#include "go3/model.hpp"
#include "json.hpp"

namespace go3 {

// Power outside the energy curve domain; the evaluator treats this as a hard
// infeasibility before any objective arithmetic runs.
struct OutOfDomainError : std::runtime_error {
    double p;
    explicit OutOfDomainError(double power)
        : std::runtime_error("power outside energy curve domain"), p(power) {}
};

// z_en_jt = D_t * C_jt(p). Throws OutOfDomainError when p is outside the curve.
double energy_term(const Device& dev, int t, double p, double d_t);

struct SchedulingCosts {
    std::vector<double> su, sd, on;  // per interval
};
SchedulingCosts scheduling_costs(const Device& dev, std::span<const double> u,
                                 std::span<const double> durations);

struct ReserveTermsResult {
    std::vector<double> device_cost;    // z_rsv_jt per device
    std::vector<double> zone_required;  // p_rsv_req_nt per zone
    std::vector<double> zone_shortfall;
    std::vector<double> zone_penalty;   // z_rsv_nt per zone
};
ReserveTermsResult reserve_terms(const Instance& inst, const Solution& sol, int t);

// (z_p_it, z_q_it) from the complex bus imbalance.
std::pair<double, double> imbalance_penalties(Complex s_it, double d_t,
                                              const PenaltyParams& pen);

// z_s_jt = D_t C_s max(0, max(|s_fr|, |s_to|) - s_max)
double base_overload_penalty(const AcBranch& br, Complex s_fr, Complex s_to, double d_t,
                             double c_s);

// z_sw_jt per interval for one AC branch status sequence.
std::vector<double> switching_cost(std::span<const double> u, int u0,
                                   std::span<const double> durations, double c_sw);

// z_en_je = C_en max(0, a0 + sum_t coeffs[t] p_t)
double multi_interval_energy_penalty(const EnergyConstraint& ec, std::span<const double> p,
                                     double c_en);

struct ObjectiveBreakdown {
    double z_ms = 0.0;
    double z_base = 0.0;
    double z_ctg_worst = 0.0;
    double z_ctg_avg = 0.0;
    std::vector<double> z_time_t;

    // Signed-magnitude totals; z_time_t combines them with the signs of the
    // market-surplus objective.
    double energy_value = 0.0;  // consumers
    double energy_cost = 0.0;   // producers
    double z_rsv = 0.0;         // device reserve provision cost
    double z_su = 0.0;
    double z_sd = 0.0;
    double z_on = 0.0;
    double z_sw = 0.0;
    double z_s = 0.0;        // base-case overload
    double z_rsv_zone = 0.0; // zonal shortage penalty
    double z_p = 0.0;
    double z_q = 0.0;
    double z_en = 0.0;       // multi-interval energy violations

    nlohmann::json to_json() const;
};

// Per-interval component tables, ready to be combined.
struct TermTables {
    int nt = 0;
    std::vector<double> consumer_value_t, producer_cost_t;
    std::vector<double> rsv_cost_t, su_t, sd_t, on_t;
    std::vector<double> sw_t, s_base_t;
    std::vector<double> rsv_zone_t;
    std::vector<double> p_imb_t, q_imb_t;
    double z_en_multi = 0.0;

    explicit TermTables(int num_t = 0) { resize(num_t); }
    void resize(int num_t);
};

ObjectiveBreakdown assemble_objective(const TermTables& tables, const CtgAggregate& ctg);

}  // namespace go3
