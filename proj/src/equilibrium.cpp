#include "go3/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace go3 {

double StepCurve::total_quantity() const {
    double q = 0.0;
    for (const auto& b : blocks) q += b.width;
    return q;
}

double StepCurve::price_at(double q, double exhausted) const {
    double cum = 0.0;
    for (const auto& b : blocks) {
        cum += b.width;
        if (q < cum) return b.price;
    }
    return exhausted;
}

std::pair<StepCurve, StepCurve> aggregate_curves(const Instance& inst, int t) {
    StepCurve supply, demand;
    for (const auto& d : inst.devices) {
        // Clip each device's blocks to its interval capacity.
        double room = d.p_max[t];
        for (const auto& blk : d.cost[t].blocks) {
            if (room <= 0.0) break;
            const double w = std::min(blk.width, room);
            if (w <= 0.0) continue;
            (d.is_producer() ? supply : demand).blocks.push_back({w, blk.price});
            room -= w;
        }
    }
    std::stable_sort(supply.blocks.begin(), supply.blocks.end(),
                     [](const auto& a, const auto& b) { return a.price < b.price; });
    std::stable_sort(demand.blocks.begin(), demand.blocks.end(),
                     [](const auto& a, const auto& b) { return a.price > b.price; });
    return {supply, demand};
}

ClearingResult clear_market(const StepCurve& supply, const StepCurve& demand) {
    ClearingResult r;
    const double inf = std::numeric_limits<double>::infinity();

    // Walk the merged block boundaries; on each segment both prices are
    // constant, and clearing extends while demand price >= supply price.
    std::vector<double> cuts{0.0};
    double cum = 0.0;
    for (const auto& b : supply.blocks) cuts.push_back(cum += b.width);
    cum = 0.0;
    for (const auto& b : demand.blocks) cuts.push_back(cum += b.width);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               cuts.end());

    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        const double mid = 0.5 * (lo + hi);
        const double sp = supply.price_at(mid, inf);
        const double dp = demand.price_at(mid, -inf);
        if (dp < sp) break;
        r.q_star = hi;
        r.surplus += (dp - sp) * (hi - lo);
        r.gen_cost += sp * (hi - lo);
    }

    if (r.q_star > 0.0) {
        const double probe = r.q_star - 1e-12;
        r.price_lo = supply.price_at(probe, inf);
        r.price_hi = demand.price_at(probe, -inf);
    }
    return r;
}

GapReport equilibrium_report(const Instance& inst) {
    GapReport rep;
    for (int t = 0; t < inst.num_t(); ++t) {
        auto [supply, demand] = aggregate_curves(inst, t);
        ClearingResult cr = clear_market(supply, demand);
        const double d_t = inst.intervals[t].duration;
        rep.equilibrium_surplus += d_t * cr.surplus;
        rep.equilibrium_gen_cost += d_t * cr.gen_cost;
        rep.per_interval.push_back(cr);
    }
    return rep;
}

GapReport bound_report(const Instance& inst, const Evaluation& ev) {
    GapReport rep = equilibrium_report(inst);
    rep.z_ms = ev.objective ? ev.objective->z_ms : 0.0;
    rep.gap_abs = rep.equilibrium_surplus - rep.z_ms;
    rep.negative_gap = rep.gap_abs < 0.0;
    rep.gap_rel_surplus =
        rep.equilibrium_surplus != 0.0 ? rep.gap_abs / rep.equilibrium_surplus : 0.0;
    if (rep.equilibrium_gen_cost != 0.0)
        rep.gap_rel_cost = rep.gap_abs / rep.equilibrium_gen_cost;
    return rep;
}

nlohmann::json GapReport::to_json() const {
    nlohmann::json per_t = nlohmann::json::array();
    for (const auto& cr : per_interval)
        per_t.push_back(nlohmann::json{{"q_star", cr.q_star},
                                       {"price_lo", cr.price_lo},
                                       {"price_hi", cr.price_hi},
                                       {"surplus", cr.surplus},
                                       {"gen_cost", cr.gen_cost}});
    nlohmann::json j{{"equilibrium_surplus", equilibrium_surplus},
                     {"equilibrium_gen_cost", equilibrium_gen_cost},
                     {"z_ms", z_ms},
                     {"gap_abs", gap_abs},
                     {"gap_rel_surplus", gap_rel_surplus},
                     {"negative_gap", negative_gap},
                     {"per_interval", per_t}};
    j["gap_rel_cost"] = gap_rel_cost ? nlohmann::json(*gap_rel_cost) : nlohmann::json();
    return j;
}

}  // namespace go3
