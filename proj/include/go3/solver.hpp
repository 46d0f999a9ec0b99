#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "go3/acpf.hpp"
#include "go3/evaluator.hpp"
#include "go3/model.hpp"

namespace go3 {

struct SolverConfig {
    double wall_clock_budget = 60.0;  // seconds
    std::uint64_t seed = 0;
    bool enable_batch_rounding = true;
    bool enable_switch_search = false;
    bool enable_lodf_screen = true;
    NewtonOptions newton;
    int polish_eval_cap = 60;      // candidate evaluations during polish
    double round_threshold = 0.4;  // conservative-up rounding bias
    int batches = 4;
    // When set, wall clock is ignored and the run is fully deterministic:
    // identical (instance, config) pairs produce byte-identical solutions.
    bool iteration_capped = false;
};

struct BudgetTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Commitment decisions; device entries may be fractional while relaxed.
struct CandidateSchedule {
    int nt = 0;
    std::vector<double> dev_u;
    std::vector<double> ac_u;

    int idx(int e, int t) const { return e * nt + t; }
    bool integral() const;
};

struct WriteRecord {
    int sequence = 0;
    double score = 0.0;
};

struct SolveResult {
    Solution best;
    Evaluation eval;
    std::vector<WriteRecord> writes;
};

// Full pipeline: trivial fallback, merit-order UC (optionally through batch
// rounding), forward dispatch with AC refinement, then evaluator-in-the-loop
// polish. Every improvement is written atomically to out_path (when non-empty)
// so the on-disk file is always the best hard-feasible solution so far.
SolveResult solve(const Instance& inst, const SolverConfig& cfg,
                  const std::string& out_path = {});

// Merit-order commitment over the horizon, repaired to schedule feasibility.
CandidateSchedule uc_phase(const Instance& inst);

// Merit-order commitment with the marginal producer left fractional per
// interval; input to batch_round.
CandidateSchedule uc_relaxation(const Instance& inst);

// Iterative batch rounding: devices grouped by size, rounded a batch at a
// time with a conservative-up bias, remaining fractional values re-estimated
// after each batch. Result is binary and schedule-feasible.
CandidateSchedule batch_round(const Instance& inst, const CandidateSchedule& fractional,
                              int batches, double threshold = 0.4);

// Desired on/off pattern -> binary, schedule-feasible pattern: forced windows
// override, switches blocked by minimum up/down times are suppressed, excess
// startups/shutdowns are dropped cheapest-first.
CandidateSchedule finalize_schedule(const Instance& inst, const CandidateSchedule& desired,
                                    double threshold = 0.5);

struct DispatchResult {
    std::vector<double> p, q, p_rsv;  // per device
};

// Per-device upper dispatch envelope honoring future shutdown ramps and
// capacity dips; ub[j*nt + t].
std::vector<double> dispatch_upper_envelope(const Instance& inst,
                                            const CandidateSchedule& sched);

// PWL merit-order dispatch at interval t, clipped to ramp windows chained off
// prev_p, with reserves assigned greedily per zone. loss_adder is extra
// price-inelastic demand covering estimated network losses.
DispatchResult dispatch_phase(const Instance& inst, const CandidateSchedule& sched, int t,
                              std::span<const double> prev_p, double loss_adder = 0.0,
                              const std::vector<double>* upper_envelope = nullptr);

// Newton power flow with the residual spread over committed producers, then
// greedy shunt stepping and reactive adjustment. Voltages are projected into
// their hard bounds before being written into sol; leftover imbalance is left
// to the penalties. Returns total series real losses at t.
double ac_refine(const Instance& inst, const CandidateSchedule& sched,
                 DispatchResult& dispatch, int t, Solution& sol,
                 std::span<const double> prev_p,
                 const std::vector<double>* upper_envelope, const NewtonOptions& newton);

// Complete solution from a binary schedule: forward dispatch with loss
// feedback, AC refinement per interval, indicators and branch settings filled.
Solution build_solution(const Instance& inst, const CandidateSchedule& sched,
                        const NewtonOptions& newton = {});

// Always hard-feasible baseline: devices held at their (repaired) initial
// statuses and minimal feasible dispatch, flat voltages, zero reserves.
Solution fallback_solution(const Instance& inst);

}  // namespace go3
