#pragma once

#include <complex>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace go3 {

using Complex = std::complex<double>;

struct Interval {
    int id = 0;
    double duration = 1.0;  // hours, strictly positive
};

struct Bus {
    std::string id;
    double v_min = 0.9;
    double v_max = 1.1;
    double alpha = 0.0;  // slack distribution factor, 1/|I|; set in finalize()
};

// Piecewise linear energy value/cost curve stored as marginal-price blocks
// (width, price). Domain is [0, total_width()]. Producer cost curves have
// nondecreasing prices (convex), consumer value curves nonincreasing (concave).
struct PwlCurve {
    struct Block {
        double width = 0.0;  // pu
        double price = 0.0;  // $/pu-h
    };
    std::vector<Block> blocks;

    double total_width() const;
    // Integral of the marginal price over [0, p]. p must be inside the domain.
    double value(double p) const;
    bool contains(double p, double tol) const;
};

enum class DeviceKind { Producing, Consuming };

// Max startups/shutdowns over a set of intervals.
struct CountWindow {
    std::vector<int> intervals;
    int limit = 0;
};

// Soft multi-interval energy constraint: a0 + sum_t coeffs[t] * p_jt <= 0.
struct EnergyConstraint {
    double a0 = 0.0;
    std::map<int, double> coeffs;  // interval -> linear coefficient
};

struct Device {
    std::string id;
    DeviceKind kind = DeviceKind::Producing;
    std::string bus_id;
    int bus = -1;  // dense index, resolved in finalize()

    int u0 = 0;       // initial on/off status
    double p0 = 0.0;  // power prior to horizon start

    std::vector<double> p_min, p_max;  // per interval, pu
    std::vector<double> q_min, q_max;

    double ramp_up = 0.0;        // pu/h while online
    double ramp_down = 0.0;
    double ramp_startup = 0.0;   // pu/h when starting up
    double ramp_shutdown = 0.0;  // pu/h when shutting down

    std::vector<double> reserve_max;  // per interval
    double reserve_cost = 0.0;        // $/pu-h

    double startup_cost = 0.0;
    double shutdown_cost = 0.0;
    double on_cost = 0.0;  // no-load $/h

    std::vector<PwlCurve> cost;  // energy curve per interval

    std::set<int> must_run;       // intervals with forced u=1
    std::set<int> forced_outage;  // intervals with forced u=0

    double min_uptime = 0.0;    // hours
    double min_downtime = 0.0;

    std::vector<CountWindow> max_startups;
    std::vector<CountWindow> max_shutdowns;
    std::vector<EnergyConstraint> energy_constraints;

    // Lookback windows, one set of prior intervals per t, derived in finalize():
    // dn_window[t] = prior intervals whose shutdown forbids a startup at t,
    // up_window[t] = prior intervals whose startup forbids a shutdown at t.
    std::vector<std::vector<int>> dn_window;
    std::vector<std::vector<int>> up_window;

    bool is_producer() const { return kind == DeviceKind::Producing; }
};

struct Shunt {
    std::string id;
    std::string bus_id;
    int bus = -1;
    Complex y_step{0.0, 0.0};  // step admittance to ground
    int u_min = 0;
    int u_max = 0;
};

struct AcBranch {
    std::string id;
    std::string from_id, to_id;
    int from = -1, to = -1;
    Complex y_sr{0.0, 0.0};  // series admittance
    Complex y_fr{0.0, 0.0};  // admittance to ground at from bus
    Complex y_to{0.0, 0.0};  // admittance to ground at to bus
    double tau_min = 1.0, tau_max = 1.0;  // winding ratio bounds
    double phi_min = 0.0, phi_max = 0.0;  // phase difference bounds (rad)
    double s_max = 0.0;      // apparent power limit, base case
    double s_max_ctg = 0.0;  // post-contingency limit
    int u0 = 1;              // initial connection status

    double b_sr() const { return y_sr.imag(); }
};

struct DcBranch {
    std::string id;
    std::string from_id, to_id;
    int from = -1, to = -1;
    double p_max = 0.0;  // flow bound in either direction
    double q_min_fr = 0.0, q_max_fr = 0.0;
    double q_min_to = 0.0, q_max_to = 0.0;
};

struct ReserveZone {
    std::string id;
    double sigma = 0.0;             // requirement multiplier
    double shortage_penalty = 0.0;  // $/pu-h
    std::vector<std::string> member_ids;
    std::vector<int> members;  // device indices, resolved in finalize()
};

enum class BranchKind { Ac, Dc };

struct Contingency {
    std::string id;
    std::string branch_id;  // outaged AC or DC branch
    BranchKind kind = BranchKind::Ac;
    int branch = -1;  // resolved in finalize()
};

struct PenaltyParams {
    double c_p = 0.0;   // real imbalance, $/pu-h
    double c_q = 0.0;   // reactive imbalance
    double c_s = 0.0;   // branch overload
    double c_sw = 0.0;  // branch switching
    double c_en = 0.0;  // multi-interval energy violation
};

struct Instance {
    std::string format_version = "1";
    double base_mva = 100.0;
    nlohmann::json meta;  // free-form generator metadata, preserved on round trip

    std::vector<Interval> intervals;
    std::vector<Bus> buses;
    std::vector<Device> devices;
    std::vector<Shunt> shunts;
    std::vector<AcBranch> ac_branches;
    std::vector<DcBranch> dc_branches;
    std::vector<ReserveZone> zones;
    std::vector<Contingency> contingencies;
    PenaltyParams penalties;

    // Index maps and adjacency, built by finalize().
    std::unordered_map<std::string, int> bus_index, device_index, shunt_index,
        ac_index, dc_index, zone_index, ctg_index;
    std::vector<std::vector<int>> producers_at_bus, consumers_at_bus, shunts_at_bus;
    std::vector<std::vector<int>> ac_from_bus, ac_to_bus, dc_from_bus, dc_to_bus;
    std::vector<std::vector<int>> zones_of_device;

    int num_t() const { return static_cast<int>(intervals.size()); }
    int num_buses() const { return static_cast<int>(buses.size()); }

    // Resolve string references to dense indices, compute alpha and the
    // per-device lookback windows, build adjacency lists. Unresolvable
    // references are left at -1 for validate_instance to report.
    void finalize();
};

// One decision-variable cell per entity and interval; values stored row-major
// as [entity * nt + t]. Integer variables are carried as doubles so that files
// with fractional values can be loaded and rejected by the evaluator.
struct Solution {
    int nt = 0;

    std::vector<double> bus_v, bus_theta;
    std::vector<double> dev_p, dev_q, dev_u, dev_u_su, dev_u_sd, dev_p_rsv;
    std::vector<double> shunt_u;
    std::vector<double> ac_u, ac_u_su, ac_u_sd, ac_tau, ac_phi;
    std::vector<double> dc_p_fr, dc_q_fr, dc_q_to;

    int idx(int entity, int t) const { return entity * nt + t; }

    // Allocate all tables for the given instance, zero-filled.
    static Solution sized_for(const Instance& inst);

    bool all_finite() const;
};

struct ValidationReport {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

ValidationReport validate_instance(const Instance& inst);

// Lookback windows from minimum up/down times and interval durations.
// dn[t] holds every t' < t with sum of durations over [t', t-1] < min_downtime
// (a shutdown there leaves too little downtime before a startup at t);
// up[t] is the symmetric set for min_uptime.
struct LookbackWindows {
    std::vector<std::vector<int>> up, dn;
};
LookbackWindows derive_lookback_windows(double min_uptime, double min_downtime,
                                        const std::vector<Interval>& intervals);

struct ComponentLabeling {
    std::vector<int> component;  // per bus
    int count = 0;
};

// Connected components over DC branches plus AC branches with status 1,
// minus an optional outaged branch. ac_status must cover all AC branches.
ComponentLabeling build_topology(const Instance& inst,
                                 const std::vector<int>& ac_status,
                                 std::optional<std::pair<BranchKind, int>> outage = {});

class UnionFind {
  public:
    explicit UnionFind(int n);
    int find(int x);
    void merge(int x, int y);
    int count() const { return count_; }

  private:
    std::vector<int> parent_, size_;
    int count_;
};

}  // namespace go3
