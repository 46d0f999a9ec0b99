#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "go3/evaluator.hpp"
#include "go3/model.hpp"
#include "json.hpp"

namespace go3 {

// Monotone price-quantity step curve; supply prices ascend, demand descend.
struct StepCurve {
    struct Block {
        double width = 0.0;
        double price = 0.0;
    };
    std::vector<Block> blocks;

    double total_quantity() const;
    // Price of the block containing quantity q (blocks half-open on the
    // right); past the end returns `exhausted`.
    double price_at(double q, double exhausted) const;
};

// System-wide merged curves for one interval. Commitment, ramping, network,
// losses, reactive power, and voltage are all ignored; every producer block
// over [0, p_max_jt] is offerable and every consumer block biddable.
std::pair<StepCurve, StepCurve> aggregate_curves(const Instance& inst, int t);

struct ClearingResult {
    double q_star = 0.0;
    double price_lo = 0.0, price_hi = 0.0;
    double surplus = 0.0;   // $/h
    double gen_cost = 0.0;  // $/h
};

ClearingResult clear_market(const StepCurve& supply, const StepCurve& demand);

struct GapReport {
    double equilibrium_surplus = 0.0;   // sum_t D_t * surplus_t
    double equilibrium_gen_cost = 0.0;  // sum_t D_t * gen_cost_t
    double z_ms = 0.0;
    double gap_abs = 0.0;               // equilibrium surplus - z_ms
    double gap_rel_surplus = 0.0;
    std::optional<double> gap_rel_cost;  // absent when gen_cost is 0
    bool negative_gap = false;
    std::vector<ClearingResult> per_interval;

    nlohmann::json to_json() const;
};

// Equilibrium bound and gap normalizations against a feasible evaluation.
GapReport bound_report(const Instance& inst, const Evaluation& ev);

// Equilibrium side only, usable without a solution.
GapReport equilibrium_report(const Instance& inst);

}  // namespace go3
