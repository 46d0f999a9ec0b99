#pragma once

#include <memory>
#include <vector>

#include "go3/model.hpp"

namespace go3 {

struct DcContingencyResult {
    std::vector<double> theta;  // per bus, reference bus at 0
    std::vector<double> flow;   // per AC branch; 0 for open or outaged branches
    double p_slack = 0.0;       // system-wide real power mismatch p_sl_t
};

enum class DcStatus { Ok, Disconnected, Singular };

struct DcSolve {
    DcStatus status = DcStatus::Ok;
    DcContingencyResult result;
    int components = 1;  // filled when status == Disconnected
};

// p_sl_t = sum of producer p - consumer p - shunt real power, with shunt real
// power recomputed from the solution voltages.
double system_slack(const Instance& inst, const Solution& sol, int t);

// Post-contingency lossless DC flows for contingency k at interval t, with
// injections fixed at pre-contingency values and the system mismatch spread
// over buses by the alpha factors. k = -1 solves the base (no-outage) case.
DcSolve solve_dc_contingency(const Instance& inst, const Solution& sol, int t, int k);

// Post-contingency overload penalty z_ctg_tk; per_branch (per AC branch, 0
// where not applicable) is filled when non-null. Base-case reactive flows are
// recomputed from the solution voltages.
double contingency_overload_penalty(const Instance& inst, const DcContingencyResult& dc,
                                    const Solution& sol, int t, int k,
                                    std::vector<double>* per_branch = nullptr);

struct CtgAggregate {
    std::vector<double> worst_t, avg_t;  // per interval
    double worst_total = 0.0;
    double avg_total = 0.0;
};

// penalties[t][k] = z_ctg_tk. Empty contingency sets aggregate to zero.
CtgAggregate ctg_aggregate(const Instance& inst,
                           const std::vector<std::vector<double>>& penalties);

struct ConnectivityReport {
    struct Violation {
        int t = 0;
        int k = -1;  // -1 for a base-case violation
        int components = 0;
    };
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Base-case and per-contingency connectivity across all intervals.
ConnectivityReport check_connectivity(const Instance& inst, const Solution& sol);

// Base-case DC solution with a reusable factorization, for LODF screening.
struct DcBaseState {
    DcContingencyResult base;
    int ref_bus = 0;
    std::vector<int> ac_status;            // per AC branch at this interval
    std::shared_ptr<const void> factor;    // opaque factorization handle
};

DcBaseState solve_dc_base(const Instance& inst, const Solution& sol, int t);

enum class LodfStatus { Ok, BridgeOutage };

struct LodfScreen {
    LodfStatus status = LodfStatus::Ok;
    std::vector<double> flow;  // per AC branch
};

// Fast post-contingency flows through a rank-1 update of the base solve. AC
// outages use line-outage distribution factors; a DC-branch outage reuses the
// base factorization with adjusted injections. Bridge outages are rejected
// and the caller falls back to solve_dc_contingency.
LodfScreen lodf_screen(const Instance& inst, const DcBaseState& base, const Solution& sol,
                       int t, int k);

}  // namespace go3
