#include "go3/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "go3/contingency.hpp"
#include "go3/equilibrium.hpp"
#include "go3/json_io.hpp"
#include "go3/objective.hpp"

namespace go3 {

namespace {

constexpr double kEps = 1e-9;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// ---------------------------------------------------------------------------
// Schedule machinery
// ---------------------------------------------------------------------------

// Forward state machine: honor the desired pattern wherever the minimum
// up/down dwell times allow a switch, with lookahead so we never enter a
// state that a forced window would cut short. Devices are assumed to have
// been in their initial state long enough before the horizon.
std::vector<int> repair_device_pattern(const Device& d, const std::vector<Interval>& ivs,
                                       const std::vector<int>& desired) {
    const int nt = static_cast<int>(ivs.size());
    std::vector<int> u(nt, 0);
    int status = d.u0;
    double dwell = 1e18;
    for (int t = 0; t < nt; ++t) {
        int want = desired[t];
        const bool forced = d.must_run.count(t) || d.forced_outage.count(t);
        if (d.must_run.count(t)) want = 1;
        if (d.forced_outage.count(t)) want = 0;
        if (want != status) {
            bool allowed = dwell >= (want == 1 ? d.min_downtime : d.min_uptime) - kEps;
            if (allowed && !forced) {
                const double need = want == 1 ? d.min_uptime : d.min_downtime;
                double ahead = 0.0;
                for (int s = t; s < nt && ahead < need - kEps; ++s) {
                    if ((want == 1 && d.forced_outage.count(s)) ||
                        (want == 0 && d.must_run.count(s))) {
                        allowed = false;
                        break;
                    }
                    ahead += ivs[s].duration;
                }
            }
            if (allowed || forced) {
                status = want;
                dwell = 0.0;
            }
        }
        u[t] = status;
        dwell += ivs[t].duration;
    }
    return u;
}

struct OnRun {
    int start = 0, end = 0;  // inclusive
};

std::vector<OnRun> on_runs(const std::vector<int>& u) {
    std::vector<OnRun> runs;
    const int nt = static_cast<int>(u.size());
    for (int t = 0; t < nt;) {
        if (u[t] == 1) {
            int s = t;
            while (t < nt && u[t] == 1) ++t;
            runs.push_back({s, t - 1});
        } else {
            ++t;
        }
    }
    return runs;
}

double run_capacity_hours(const Device& d, const std::vector<Interval>& ivs, const OnRun& r) {
    double v = 0.0;
    for (int t = r.start; t <= r.end; ++t) v += ivs[t].duration * d.p_max[t];
    return v;
}

bool run_has_must_run(const Device& d, const OnRun& r) {
    for (int t = r.start; t <= r.end; ++t)
        if (d.must_run.count(t)) return true;
    return false;
}

// Drop or extend runs until every max-startups/max-shutdowns window holds.
// Startup excess drops the cheapest runs (by capacity-hours); shutdown excess
// first tries extending the latest-ending run to the horizon end.
void enforce_count_limits(const Device& d, const std::vector<Interval>& ivs,
                          std::vector<int>& u) {
    const int nt = static_cast<int>(u.size());
    for (int guard = 0; guard < 64; ++guard) {
        std::vector<int> su(nt, 0), sd(nt, 0);
        for (int t = 0; t < nt; ++t) {
            const int prev = t > 0 ? u[t - 1] : d.u0;
            su[t] = u[t] > prev ? 1 : 0;
            sd[t] = u[t] < prev ? 1 : 0;
        }
        bool changed = false;

        for (const auto& cw : d.max_startups) {
            int count = 0;
            for (int t : cw.intervals) count += su[t];
            if (count <= cw.limit) continue;
            std::vector<OnRun> runs = on_runs(u);
            int pick = -1;
            double pick_value = 0.0;
            for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
                const int s = runs[r].start;
                const bool starts_here = su[s] == 1 &&
                                         std::find(cw.intervals.begin(), cw.intervals.end(),
                                                   s) != cw.intervals.end();
                if (!starts_here || run_has_must_run(d, runs[r])) continue;
                const double value = run_capacity_hours(d, ivs, runs[r]);
                if (pick < 0 || value < pick_value) {
                    pick = r;
                    pick_value = value;
                }
            }
            if (pick < 0) break;
            for (int t = runs[pick].start; t <= runs[pick].end; ++t) u[t] = 0;
            changed = true;
            break;
        }
        if (changed) continue;

        for (const auto& cw : d.max_shutdowns) {
            int count = 0;
            for (int t : cw.intervals) count += sd[t];
            if (count <= cw.limit) continue;
            std::vector<OnRun> runs = on_runs(u);
            // Extend the run with the latest shutdown in the window.
            int pick = -1;
            for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
                const int s = runs[r].end + 1;
                if (s >= nt || sd[s] == 0) continue;
                if (std::find(cw.intervals.begin(), cw.intervals.end(), s) ==
                    cw.intervals.end())
                    continue;
                if (pick < 0 || runs[r].end > runs[pick].end) pick = r;
            }
            if (pick >= 0) {
                bool blocked = false;
                for (int t = runs[pick].end + 1; t < nt; ++t)
                    if (d.forced_outage.count(t)) blocked = true;
                if (!blocked) {
                    for (int t = runs[pick].end + 1; t < nt; ++t) u[t] = 1;
                    changed = true;
                    break;
                }
                if (!run_has_must_run(d, runs[pick])) {
                    for (int t = runs[pick].start; t <= runs[pick].end; ++t) u[t] = 0;
                    changed = true;
                    break;
                }
            }
            break;
        }
        if (!changed) break;
    }
}

std::vector<double> interval_prices(const Instance& inst) {
    std::vector<double> pi(inst.num_t(), 0.0);
    for (int t = 0; t < inst.num_t(); ++t) {
        auto [supply, demand] = aggregate_curves(inst, t);
        ClearingResult cr = clear_market(supply, demand);
        pi[t] = cr.q_star > 0.0 ? 0.5 * (cr.price_lo + cr.price_hi) : 0.0;
    }
    return pi;
}

double average_cost_at_pmax(const Device& d, int t) {
    if (d.p_max[t] <= 0.0) return std::numeric_limits<double>::infinity();
    return d.cost[t].value(d.p_max[t]) / d.p_max[t];
}

double max_zone_sigma(const Instance& inst) {
    double s = 0.0;
    for (const auto& z : inst.zones) s = std::max(s, z.sigma);
    return s;
}

}  // namespace

bool CandidateSchedule::integral() const {
    for (double v : dev_u)
        if (v != 0.0 && v != 1.0) return false;
    for (double v : ac_u)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

CandidateSchedule finalize_schedule(const Instance& inst, const CandidateSchedule& desired,
                                    double threshold) {
    const int nt = inst.num_t();
    CandidateSchedule out = desired;
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        std::vector<int> want(nt);
        for (int t = 0; t < nt; ++t)
            want[t] = desired.dev_u[desired.idx(j, t)] >= threshold ? 1 : 0;
        std::vector<int> u = repair_device_pattern(d, inst.intervals, want);
        enforce_count_limits(d, inst.intervals, u);
        for (int t = 0; t < nt; ++t) out.dev_u[out.idx(j, t)] = u[t];
    }
    for (double& v : out.ac_u) v = v >= threshold ? 1.0 : 0.0;
    return out;
}

CandidateSchedule uc_relaxation(const Instance& inst) {
    const int nt = inst.num_t();
    CandidateSchedule sched;
    sched.nt = nt;
    sched.dev_u.assign(inst.devices.size() * nt, 0.0);
    sched.ac_u.assign(inst.ac_branches.size() * nt, 0.0);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j)
        for (int t = 0; t < nt; ++t)
            sched.ac_u[sched.idx(j, t)] = inst.ac_branches[j].u0;

    const std::vector<double> pi = interval_prices(inst);
    const double sigma = max_zone_sigma(inst);

    for (int t = 0; t < nt; ++t) {
        double load = 0.0;
        for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
            const auto& d = inst.devices[j];
            if (d.is_producer()) continue;
            int commit = 0;
            if (d.must_run.count(t))
                commit = 1;
            else if (d.forced_outage.count(t))
                commit = 0;
            else if (!d.cost[t].blocks.empty() && d.p_max[t] > 0.0)
                commit = d.cost[t].blocks.front().price >= pi[t] ? 1 : 0;
            sched.dev_u[sched.idx(j, t)] = commit;
            if (commit) load += d.p_max[t];
        }

        const double need = load * (1.0 + sigma);
        double committed = 0.0;
        std::vector<int> order;
        for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
            const auto& d = inst.devices[j];
            if (!d.is_producer()) continue;
            if (d.must_run.count(t)) {
                sched.dev_u[sched.idx(j, t)] = 1.0;
                committed += d.p_max[t];
            } else if (d.forced_outage.count(t)) {
                sched.dev_u[sched.idx(j, t)] = 0.0;
            } else {
                order.push_back(j);
            }
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return average_cost_at_pmax(inst.devices[a], t) <
                   average_cost_at_pmax(inst.devices[b], t);
        });
        for (int j : order) {
            const double cap = inst.devices[j].p_max[t];
            double frac = 0.0;
            if (committed < need - kEps && cap > 0.0)
                frac = std::min(1.0, (need - committed) / cap);
            sched.dev_u[sched.idx(j, t)] = frac;
            committed += frac * cap;
        }
    }
    return sched;
}

CandidateSchedule uc_phase(const Instance& inst) {
    // Any fractionally committed marginal unit rounds up to a full commitment.
    return finalize_schedule(inst, uc_relaxation(inst), 1e-9);
}

CandidateSchedule batch_round(const Instance& inst, const CandidateSchedule& fractional,
                              int batches, double threshold) {
    const int nt = inst.num_t();
    CandidateSchedule work = fractional;

    std::vector<int> producers;
    std::vector<bool> is_fractional(inst.devices.size(), false);
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        for (int t = 0; t < nt; ++t) {
            const double v = work.dev_u[work.idx(j, t)];
            if (v != 0.0 && v != 1.0) is_fractional[j] = true;
        }
        if (inst.devices[j].is_producer()) producers.push_back(j);
    }

    std::vector<int> order(inst.devices.size());
    std::iota(order.begin(), order.end(), 0);
    auto size_of = [&](int j) {
        double s = 0.0;
        for (int t = 0; t < nt; ++t) s += inst.devices[j].p_max[t];
        return s;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return size_of(a) > size_of(b); });

    const int nb = std::max(1, batches);
    const int per = (static_cast<int>(order.size()) + nb - 1) / nb;
    const std::vector<double> pi = interval_prices(inst);
    const double sigma = max_zone_sigma(inst);

    std::vector<bool> rounded(inst.devices.size(), false);
    for (int b = 0; b < nb; ++b) {
        for (int m = b * per; m < std::min<int>((b + 1) * per, order.size()); ++m) {
            const int j = order[m];
            for (int t = 0; t < nt; ++t) {
                double& v = work.dev_u[work.idx(j, t)];
                v = v >= threshold ? 1.0 : 0.0;
            }
            rounded[j] = true;
        }
        // Refresh the marginal fractions of devices still waiting: redo the
        // merit fill against capacity already fixed by earlier batches.
        for (int t = 0; t < nt; ++t) {
            double load = 0.0;
            for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
                if (!inst.devices[j].is_producer() && work.dev_u[work.idx(j, t)] >= 0.5)
                    load += inst.devices[j].p_max[t];
            const double need = load * (1.0 + sigma);
            double committed = 0.0;
            std::vector<int> remaining;
            for (int j : producers) {
                if (rounded[j] || !is_fractional[j]) {
                    committed += work.dev_u[work.idx(j, t)] * inst.devices[j].p_max[t];
                } else if (inst.devices[j].must_run.count(t)) {
                    work.dev_u[work.idx(j, t)] = 1.0;
                    committed += inst.devices[j].p_max[t];
                } else if (inst.devices[j].forced_outage.count(t)) {
                    work.dev_u[work.idx(j, t)] = 0.0;
                } else {
                    remaining.push_back(j);
                }
            }
            std::stable_sort(remaining.begin(), remaining.end(), [&](int a, int lhs) {
                return average_cost_at_pmax(inst.devices[a], t) <
                       average_cost_at_pmax(inst.devices[lhs], t);
            });
            for (int j : remaining) {
                const double cap = inst.devices[j].p_max[t];
                double frac = 0.0;
                if (committed < need - kEps && cap > 0.0)
                    frac = std::min(1.0, (need - committed) / cap);
                work.dev_u[work.idx(j, t)] = frac;
                committed += frac * cap;
            }
        }
        (void)pi;
    }
    return finalize_schedule(inst, work, threshold);
}

std::vector<double> dispatch_upper_envelope(const Instance& inst,
                                            const CandidateSchedule& sched) {
    const int nt = inst.num_t();
    std::vector<double> ub(inst.devices.size() * nt, 0.0);
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        for (int t = nt - 1; t >= 0; --t) {
            const int c = j * nt + t;
            if (sched.dev_u[sched.idx(j, t)] < 0.5) {
                ub[c] = 0.0;
                continue;
            }
            ub[c] = d.p_max[t];
            if (t + 1 < nt) {
                const double d_next = inst.intervals[t + 1].duration;
                if (sched.dev_u[sched.idx(j, t + 1)] < 0.5)
                    ub[c] = std::min(ub[c], d_next * d.ramp_shutdown);
                else
                    ub[c] = std::min(ub[c], ub[c + 1] + d_next * d.ramp_down);
            }
        }
    }
    return ub;
}

namespace {

struct MarginalBlock {
    double price;
    int dev;
    double qty;
};

}  // namespace

DispatchResult dispatch_phase(const Instance& inst, const CandidateSchedule& sched, int t,
                              std::span<const double> prev_p, double loss_adder,
                              const std::vector<double>* upper_envelope) {
    const int nd = static_cast<int>(inst.devices.size());
    const double d_t = inst.intervals[t].duration;
    DispatchResult out;
    out.p.assign(nd, 0.0);
    out.q.assign(nd, 0.0);
    out.p_rsv.assign(nd, 0.0);

    std::vector<double> lo(nd, 0.0), hi(nd, 0.0);
    std::vector<MarginalBlock> supply, demand;

    for (int j = 0; j < nd; ++j) {
        const auto& d = inst.devices[j];
        const int u = sched.dev_u[sched.idx(j, t)] >= 0.5 ? 1 : 0;
        if (!u) continue;
        const int u_prev =
            t > 0 ? (sched.dev_u[sched.idx(j, t - 1)] >= 0.5 ? 1 : 0) : d.u0;
        const bool startup = u_prev == 0;
        const double ramp_hi = prev_p[j] + d_t * (startup ? d.ramp_startup : d.ramp_up);
        const double ramp_lo = prev_p[j] - d_t * d.ramp_down;

        double cap = d.p_max[t];
        if (upper_envelope) cap = std::min(cap, (*upper_envelope)[j * inst.num_t() + t]);
        hi[j] = std::min(cap, ramp_hi);
        lo[j] = std::max(d.p_min[t], ramp_lo);
        if (lo[j] > hi[j]) {
            // Infeasible ramp window: stay ramp-feasible, project toward the
            // power bounds, and let the imbalance penalties absorb the rest.
            lo[j] = hi[j] = clamp(d.p_min[t], std::max(ramp_lo, 0.0), ramp_hi);
        }
        out.p[j] = lo[j];

        // Marginal blocks above the floor, clipped to the window.
        double cum = 0.0;
        for (const auto& blk : d.cost[t].blocks) {
            const double b0 = cum, b1 = cum + blk.width;
            cum = b1;
            const double usable = std::min(b1, hi[j]) - std::max(b0, lo[j]);
            if (usable <= kEps) continue;
            (d.is_producer() ? supply : demand).push_back({blk.price, j, usable});
        }
    }

    std::stable_sort(supply.begin(), supply.end(), [](const auto& a, const auto& b) {
        return a.price != b.price ? a.price < b.price : a.dev < b.dev;
    });
    std::stable_sort(demand.begin(), demand.end(), [](const auto& a, const auto& b) {
        return a.price != b.price ? a.price > b.price : a.dev < b.dev;
    });

    double produced = 0.0, consumed = loss_adder;
    for (int j = 0; j < nd; ++j) {
        if (sched.dev_u[sched.idx(j, t)] < 0.5) continue;
        (inst.devices[j].is_producer() ? produced : consumed) += out.p[j];
    }

    size_t si = 0, di = 0;
    // Cover any floor-driven shortfall with the cheapest supply, or absorb a
    // floor-driven excess with the highest-value demand.
    while (consumed > produced + kEps && si < supply.size()) {
        auto& blk = supply[si];
        const double take = std::min(blk.qty, consumed - produced);
        out.p[blk.dev] += take;
        produced += take;
        blk.qty -= take;
        if (blk.qty <= kEps) ++si;
    }
    while (produced > consumed + kEps && di < demand.size()) {
        auto& blk = demand[di];
        const double take = std::min(blk.qty, produced - consumed);
        out.p[blk.dev] += take;
        consumed += take;
        blk.qty -= take;
        if (blk.qty <= kEps) ++di;
    }
    // Matched expansion while the marginal value exceeds the marginal cost.
    while (si < supply.size() && di < demand.size() &&
           demand[di].price > supply[si].price) {
        const double take = std::min(supply[si].qty, demand[di].qty);
        out.p[supply[si].dev] += take;
        out.p[demand[di].dev] += take;
        supply[si].qty -= take;
        demand[di].qty -= take;
        if (supply[si].qty <= kEps) ++si;
        if (demand[di].qty <= kEps) ++di;
    }

    // Greedy spinning reserve per zone, cheapest provider first; a device's
    // reserve counts toward every zone it belongs to.
    for (const auto& zone : inst.zones) {
        double req = 0.0;
        double provided = 0.0;
        for (int j : zone.members) {
            if (j < 0) continue;
            if (inst.devices[j].is_producer()) req = std::max(req, out.p[j]);
            provided += out.p_rsv[j];
        }
        req *= zone.sigma;
        if (provided >= req - kEps) continue;
        std::vector<int> members;
        for (int j : zone.members)
            if (j >= 0 && sched.dev_u[sched.idx(j, t)] >= 0.5) members.push_back(j);
        std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
            return inst.devices[a].reserve_cost != inst.devices[b].reserve_cost
                       ? inst.devices[a].reserve_cost < inst.devices[b].reserve_cost
                       : a < b;
        });
        for (int j : members) {
            if (provided >= req - kEps) break;
            const auto& d = inst.devices[j];
            const double headroom = d.is_producer() ? d.p_max[t] - out.p[j]
                                                    : out.p[j] - d.p_min[t];
            const double room =
                std::min({d.reserve_max[t] - out.p_rsv[j], headroom, req - provided});
            if (room <= kEps) continue;
            out.p_rsv[j] += room;
            provided += room;
        }
    }

    // Reactive output at a common relative position so the net injection
    // starts near zero; the AC refinement tunes it afterwards.
    double a = 0.0, b = 0.0;
    for (int j = 0; j < nd; ++j) {
        if (sched.dev_u[sched.idx(j, t)] < 0.5) continue;
        const auto& d = inst.devices[j];
        const double sign = d.is_producer() ? 1.0 : -1.0;
        a += sign * d.q_min[t];
        b += sign * (d.q_max[t] - d.q_min[t]);
    }
    const double r = std::abs(b) > 1e-12 ? clamp(-a / b, 0.0, 1.0) : 0.5;
    for (int j = 0; j < nd; ++j) {
        if (sched.dev_u[sched.idx(j, t)] < 0.5) continue;
        const auto& d = inst.devices[j];
        out.q[j] = d.q_min[t] + r * (d.q_max[t] - d.q_min[t]);
    }
    return out;
}

namespace {

int pick_slack_bus(const Instance& inst, const CandidateSchedule& sched, int t) {
    int best = -1;
    double best_cap = -1.0;
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        if (!d.is_producer() || d.bus < 0) continue;
        if (sched.dev_u[sched.idx(j, t)] < 0.5) continue;
        if (d.p_max[t] > best_cap + kEps ||
            (d.p_max[t] > best_cap - kEps && (best < 0 || d.bus < best))) {
            best_cap = d.p_max[t];
            best = d.bus;
        }
    }
    return best >= 0 ? best : 0;
}

// Spread a real-power adjustment over committed producers, respecting power
// bounds, ramp windows, reserve headroom, and the dispatch envelope. Returns
// the amount actually placed.
double distribute_real(const Instance& inst, const CandidateSchedule& sched, Solution& sol,
                       int t, std::span<const double> prev_p,
                       const std::vector<double>* env, double amount) {
    if (std::abs(amount) < 1e-14) return 0.0;
    const double d_t = inst.intervals[t].duration;
    std::vector<std::pair<int, double>> room;  // device, capacity in the move direction
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        if (!d.is_producer()) continue;
        if (sched.dev_u[sched.idx(j, t)] < 0.5) continue;
        const int u_prev =
            t > 0 ? (sched.dev_u[sched.idx(j, t - 1)] >= 0.5 ? 1 : 0) : d.u0;
        const double ramp_hi =
            prev_p[j] + d_t * (u_prev == 0 ? d.ramp_startup : d.ramp_up);
        const double ramp_lo = prev_p[j] - d_t * d.ramp_down;
        const double p = sol.dev_p[sol.idx(j, t)];
        const double rsv = sol.dev_p_rsv[sol.idx(j, t)];
        double cap;
        if (amount > 0) {
            double hi = std::min(d.p_max[t] - rsv, ramp_hi);
            if (env) hi = std::min(hi, (*env)[j * inst.num_t() + t]);
            cap = hi - p;
        } else {
            cap = p - std::max(d.p_min[t], ramp_lo);
        }
        if (cap > kEps) room.emplace_back(j, cap);
    }
    double total_cap = 0.0;
    for (auto& [j, c] : room) total_cap += c;
    if (total_cap <= kEps) return 0.0;

    const double want = std::min(std::abs(amount), total_cap);
    double placed = 0.0;
    for (auto& [j, c] : room) {
        const double share = want * (c / total_cap);
        sol.dev_p[sol.idx(j, t)] += amount > 0 ? share : -share;
        placed += share;
    }
    return amount > 0 ? placed : -placed;
}

// Cancel a reactive residual with the committed devices at one bus.
void distribute_reactive_at_bus(const Instance& inst, const CandidateSchedule& sched,
                                Solution& sol, int t, int bus, double residual) {
    if (std::abs(residual) < 1e-14) return;
    // residual > 0 means the bus needs more injection: producers raise q,
    // consumers lower q.
    for (int pass = 0; pass < 2 && std::abs(residual) > 1e-14; ++pass) {
        for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
            const auto& d = inst.devices[j];
            if (d.bus != bus || sched.dev_u[sched.idx(j, t)] < 0.5) continue;
            double& q = sol.dev_q[sol.idx(j, t)];
            const double sign = d.is_producer() ? 1.0 : -1.0;
            const double lo = d.q_min[t], hi = d.q_max[t];
            const double move = clamp(q + sign * residual, lo, hi) - q;
            q += move;
            residual -= sign * move;
            if (std::abs(residual) < 1e-14) break;
        }
    }
}

double series_losses(const Instance& inst, const Solution& sol, int t) {
    double loss = 0.0;
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double u = sol.ac_u[sol.idx(j, t)];
        if (u == 0.0) continue;
        const Complex w_fr = complex_voltage(sol.bus_v[sol.idx(br.from, t)],
                                             sol.bus_theta[sol.idx(br.from, t)]);
        const Complex w_to = complex_voltage(sol.bus_v[sol.idx(br.to, t)],
                                             sol.bus_theta[sol.idx(br.to, t)]);
        BranchFlowResult f =
            branch_flow(br, u, sol.ac_tau[sol.idx(j, t)], sol.ac_phi[sol.idx(j, t)], w_fr, w_to);
        loss += f.p_fr() + f.p_to();
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        if (sh.bus < 0) continue;
        loss += shunt_flow(sh, sol.shunt_u[sol.idx(j, t)], sol.bus_v[sol.idx(sh.bus, t)])
                    .real();
    }
    return loss;
}

void write_state(const Instance& inst, Solution& sol, int t, const ComplexVoltageState& st) {
    for (int i = 0; i < inst.num_buses(); ++i) {
        sol.bus_v[sol.idx(i, t)] = clamp(st.v[i], inst.buses[i].v_min, inst.buses[i].v_max);
        sol.bus_theta[sol.idx(i, t)] = st.theta[i];
    }
}

void flat_state(const Instance& inst, Solution& sol, int t) {
    for (int i = 0; i < inst.num_buses(); ++i) {
        sol.bus_v[sol.idx(i, t)] = clamp(1.0, inst.buses[i].v_min, inst.buses[i].v_max);
        sol.bus_theta[sol.idx(i, t)] = 0.0;
    }
}

double voltage_violation(const Instance& inst, const ComplexVoltageState& st) {
    double v = 0.0;
    for (int i = 0; i < inst.num_buses(); ++i)
        v += std::max(0.0, st.v[i] - inst.buses[i].v_max) +
             std::max(0.0, inst.buses[i].v_min - st.v[i]);
    return v;
}

}  // namespace

double ac_refine(const Instance& inst, const CandidateSchedule& sched,
                 DispatchResult& dispatch, int t, Solution& sol,
                 std::span<const double> prev_p,
                 const std::vector<double>* upper_envelope, const NewtonOptions& newton) {
    const int nd = static_cast<int>(inst.devices.size());
    for (int j = 0; j < nd; ++j) {
        sol.dev_p[sol.idx(j, t)] = dispatch.p[j];
        sol.dev_q[sol.idx(j, t)] = dispatch.q[j];
        sol.dev_p_rsv[sol.idx(j, t)] = dispatch.p_rsv[j];
    }

    const int slack = pick_slack_bus(inst, sched, t);
    ComplexVoltageState state = ComplexVoltageState::flat(inst.num_buses());
    bool have_state = false;

    auto pf_pass = [&](int rounds) {
        for (int pass = 0; pass < rounds; ++pass) {
            PowerFlowResult pf = solve_power_flow(inst, sol, t, slack, state, newton);
            if (pf.status != PfStatus::Converged) return have_state;
            state = pf.state;
            have_state = true;
            std::vector<Complex> imb = pf_mismatch(inst, sol, t, state);
            const double r_p = imb[slack].real();
            const double r_q = imb[slack].imag();
            if (std::abs(r_p) < 1e-10 && std::abs(r_q) < 1e-10) return true;
            distribute_real(inst, sched, sol, t, prev_p, upper_envelope, r_p);
            distribute_reactive_at_bus(inst, sched, sol, t, slack, r_q);
        }
        return have_state;
    };

    bool ok = pf_pass(4);

    // Greedy shunt stepping against voltage violations and leftover reactive
    // residual at the slack bus.
    if (ok && !inst.shunts.empty()) {
        auto metric = [&]() {
            std::vector<Complex> imb = pf_mismatch(inst, sol, t, state);
            return voltage_violation(inst, state) * 1e6 + std::abs(imb[slack].imag());
        };
        double best = metric();
        if (best > 1e-9) {
            for (int round = 0; round < 2; ++round) {
                bool improved = false;
                for (int s = 0; s < static_cast<int>(inst.shunts.size()); ++s) {
                    const auto& sh = inst.shunts[s];
                    for (int delta : {+1, -1}) {
                        const double cur = sol.shunt_u[sol.idx(s, t)];
                        const double trial = cur + delta;
                        if (trial < sh.u_min || trial > sh.u_max) continue;
                        sol.shunt_u[sol.idx(s, t)] = trial;
                        ComplexVoltageState saved = state;
                        PowerFlowResult pf = solve_power_flow(inst, sol, t, slack, state, newton);
                        double m = std::numeric_limits<double>::infinity();
                        if (pf.status == PfStatus::Converged) {
                            state = pf.state;
                            m = metric();
                        }
                        if (m < best - 1e-12) {
                            best = m;
                            improved = true;
                        } else {
                            sol.shunt_u[sol.idx(s, t)] = cur;
                            state = saved;
                        }
                    }
                }
                if (!improved) break;
            }
            pf_pass(2);
        }
    }

    if (ok) {
        write_state(inst, sol, t, state);
    } else {
        flat_state(inst, sol, t);
    }

    for (int j = 0; j < nd; ++j) {
        dispatch.p[j] = sol.dev_p[sol.idx(j, t)];
        dispatch.q[j] = sol.dev_q[sol.idx(j, t)];
    }
    return ok ? series_losses(inst, sol, t) : 0.0;
}

namespace {

void fill_schedule_columns(const Instance& inst, const CandidateSchedule& sched,
                           Solution& sol) {
    const int nt = inst.num_t();
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        for (int t = 0; t < nt; ++t) {
            const int u = sched.dev_u[sched.idx(j, t)] >= 0.5 ? 1 : 0;
            const int prev =
                t > 0 ? (sched.dev_u[sched.idx(j, t - 1)] >= 0.5 ? 1 : 0) : d.u0;
            sol.dev_u[sol.idx(j, t)] = u;
            sol.dev_u_su[sol.idx(j, t)] = u > prev ? 1.0 : 0.0;
            sol.dev_u_sd[sol.idx(j, t)] = u < prev ? 1.0 : 0.0;
        }
    }
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        const auto& br = inst.ac_branches[j];
        for (int t = 0; t < nt; ++t) {
            const int u = sched.ac_u[sched.idx(j, t)] >= 0.5 ? 1 : 0;
            const int prev = t > 0 ? (sched.ac_u[sched.idx(j, t - 1)] >= 0.5 ? 1 : 0) : br.u0;
            sol.ac_u[sol.idx(j, t)] = u;
            sol.ac_u_su[sol.idx(j, t)] = u > prev ? 1.0 : 0.0;
            sol.ac_u_sd[sol.idx(j, t)] = u < prev ? 1.0 : 0.0;
            sol.ac_tau[sol.idx(j, t)] = clamp(1.0, br.tau_min, br.tau_max);
            sol.ac_phi[sol.idx(j, t)] = clamp(0.0, br.phi_min, br.phi_max);
        }
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        for (int t = 0; t < nt; ++t)
            sol.shunt_u[sol.idx(j, t)] = clamp(0.0, sh.u_min, sh.u_max);
    }
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        const auto& br = inst.dc_branches[j];
        for (int t = 0; t < nt; ++t) {
            sol.dc_p_fr[sol.idx(j, t)] = 0.0;
            sol.dc_q_fr[sol.idx(j, t)] = clamp(0.0, br.q_min_fr, br.q_max_fr);
            sol.dc_q_to[sol.idx(j, t)] = clamp(0.0, br.q_min_to, br.q_max_to);
        }
    }
}

}  // namespace

Solution build_solution(const Instance& inst, const CandidateSchedule& sched,
                        const NewtonOptions& newton) {
    const int nt = inst.num_t();
    Solution sol = Solution::sized_for(inst);
    fill_schedule_columns(inst, sched, sol);

    const std::vector<double> env = dispatch_upper_envelope(inst, sched);
    std::vector<double> prev_p(inst.devices.size());
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
        prev_p[j] = inst.devices[j].p0;

    double loss_adder = 0.0;
    for (int t = 0; t < nt; ++t) {
        DispatchResult d = dispatch_phase(inst, sched, t, prev_p, loss_adder, &env);
        loss_adder = ac_refine(inst, sched, d, t, sol, prev_p, &env, newton);
        for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
            prev_p[j] = sol.dev_p[sol.idx(j, t)];
    }
    return sol;
}

Solution fallback_solution(const Instance& inst) {
    const int nt = inst.num_t();
    CandidateSchedule sched;
    sched.nt = nt;
    sched.dev_u.assign(inst.devices.size() * nt, 0.0);
    sched.ac_u.assign(inst.ac_branches.size() * nt, 0.0);
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
        for (int t = 0; t < nt; ++t)
            sched.dev_u[sched.idx(j, t)] = inst.devices[j].u0;
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j)
        for (int t = 0; t < nt; ++t)
            sched.ac_u[sched.idx(j, t)] = inst.ac_branches[j].u0;
    sched = finalize_schedule(inst, sched);

    Solution sol = Solution::sized_for(inst);
    fill_schedule_columns(inst, sched, sol);
    for (int t = 0; t < nt; ++t) flat_state(inst, sol, t);

    // Minimal feasible dispatch: track p_min within the ramp windows.
    const std::vector<double> env = dispatch_upper_envelope(inst, sched);
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        double prev = d.p0;
        for (int t = 0; t < nt; ++t) {
            const double d_t = inst.intervals[t].duration;
            const int u = sched.dev_u[sched.idx(j, t)] >= 0.5 ? 1 : 0;
            double p = 0.0;
            if (u) {
                const int u_prev =
                    t > 0 ? (sched.dev_u[sched.idx(j, t - 1)] >= 0.5 ? 1 : 0) : d.u0;
                const double hi_ramp =
                    prev + d_t * (u_prev == 0 ? d.ramp_startup : d.ramp_up);
                const double lo_ramp = prev - d_t * d.ramp_down;
                const double cap = std::min(d.p_max[t], env[j * nt + t]);
                p = clamp(d.p_min[t], std::max(lo_ramp, 0.0), std::min(hi_ramp, cap));
                p = std::max(p, d.p_min[t]);
                sol.dev_q[sol.idx(j, t)] = clamp(0.0, d.q_min[t], d.q_max[t]);
            }
            sol.dev_p[sol.idx(j, t)] = p;
            prev = p;
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Polish
// ---------------------------------------------------------------------------

namespace {

CandidateSchedule schedule_from_solution(const Instance& inst, const Solution& sol) {
    CandidateSchedule s;
    s.nt = inst.num_t();
    s.dev_u.resize(inst.devices.size() * s.nt);
    s.ac_u.resize(inst.ac_branches.size() * s.nt);
    for (size_t c = 0; c < s.dev_u.size(); ++c) s.dev_u[c] = std::round(sol.dev_u[c]);
    for (size_t c = 0; c < s.ac_u.size(); ++c) s.ac_u[c] = std::round(sol.ac_u[c]);
    return s;
}

// Exact schedule feasibility for the exhaustive micro-instance sweep.
bool pattern_feasible(const Device& d, const std::vector<int>& u, int nt) {
    std::vector<int> su(nt, 0), sd(nt, 0);
    for (int t = 0; t < nt; ++t) {
        const int prev = t > 0 ? u[t - 1] : d.u0;
        su[t] = u[t] > prev;
        sd[t] = u[t] < prev;
        if (d.must_run.count(t) && u[t] != 1) return false;
        if (d.forced_outage.count(t) && u[t] != 0) return false;
    }
    for (int t = 0; t < nt; ++t) {
        if (su[t])
            for (int tp : d.dn_window[t])
                if (sd[tp]) return false;
        if (sd[t])
            for (int tp : d.up_window[t])
                if (su[tp]) return false;
    }
    for (const auto& cw : d.max_startups) {
        int c = 0;
        for (int t : cw.intervals) c += su[t];
        if (c > cw.limit) return false;
    }
    for (const auto& cw : d.max_shutdowns) {
        int c = 0;
        for (int t : cw.intervals) c += sd[t];
        if (c > cw.limit) return false;
    }
    return true;
}

// Base-case score estimate plus LODF-screened contingency penalties, used to
// rank polish candidates before exact evaluation.
double fast_score_estimate(const Instance& inst, const Solution& sol, bool use_lodf) {
    const int nt = inst.num_t();
    const int nk = static_cast<int>(inst.contingencies.size());
    TermTables tables(nt);
    std::vector<double> durations(nt);
    for (int t = 0; t < nt; ++t) durations[t] = inst.intervals[t].duration;

    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        std::vector<double> u(nt), p(nt);
        for (int t = 0; t < nt; ++t) {
            u[t] = sol.dev_u[sol.idx(j, t)];
            p[t] = sol.dev_p[sol.idx(j, t)];
        }
        SchedulingCosts sc = scheduling_costs(d, u, durations);
        for (int t = 0; t < nt; ++t) {
            tables.su_t[t] += sc.su[t];
            tables.sd_t[t] += sc.sd[t];
            tables.on_t[t] += sc.on[t];
            double z = 0.0;
            try {
                z = energy_term(d, t, p[t], durations[t]);
            } catch (const OutOfDomainError&) {
                return -std::numeric_limits<double>::infinity();
            }
            (d.is_producer() ? tables.producer_cost_t[t] : tables.consumer_value_t[t]) += z;
        }
        for (const auto& ec : d.energy_constraints)
            tables.z_en_multi += multi_interval_energy_penalty(ec, p, inst.penalties.c_en);
    }
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        std::vector<double> u(nt);
        for (int t = 0; t < nt; ++t) u[t] = sol.ac_u[sol.idx(j, t)];
        std::vector<double> z =
            switching_cost(u, inst.ac_branches[j].u0, durations, inst.penalties.c_sw);
        for (int t = 0; t < nt; ++t) tables.sw_t[t] += z[t];
    }

    std::vector<std::vector<double>> ctg_pen(nt, std::vector<double>(nk, 0.0));
    for (int t = 0; t < nt; ++t) {
        const double d_t = durations[t];
        for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
            const auto& br = inst.ac_branches[j];
            if (br.from < 0 || br.to < 0) continue;
            const Complex w_fr = complex_voltage(sol.bus_v[sol.idx(br.from, t)],
                                                 sol.bus_theta[sol.idx(br.from, t)]);
            const Complex w_to = complex_voltage(sol.bus_v[sol.idx(br.to, t)],
                                                 sol.bus_theta[sol.idx(br.to, t)]);
            BranchFlowResult f = branch_flow(br, sol.ac_u[sol.idx(j, t)],
                                             sol.ac_tau[sol.idx(j, t)],
                                             sol.ac_phi[sol.idx(j, t)], w_fr, w_to);
            tables.s_base_t[t] +=
                base_overload_penalty(br, f.s_fr, f.s_to, d_t, inst.penalties.c_s);
        }
        std::vector<Complex> imb = bus_imbalance(inst, sol, t);
        for (const Complex& s : imb) {
            auto [zp, zq] = imbalance_penalties(s, d_t, inst.penalties);
            tables.p_imb_t[t] += zp;
            tables.q_imb_t[t] += zq;
        }
        ReserveTermsResult rsv = reserve_terms(inst, sol, t);
        for (double c : rsv.device_cost) tables.rsv_cost_t[t] += c;
        for (double z : rsv.zone_penalty) tables.rsv_zone_t[t] += z;

        if (use_lodf && nk > 0) {
            DcBaseState base = solve_dc_base(inst, sol, t);
            for (int k = 0; k < nk; ++k) {
                LodfScreen scr = lodf_screen(inst, base, sol, t, k);
                DcContingencyResult dc;
                dc.p_slack = base.base.p_slack;
                if (scr.status == LodfStatus::Ok) {
                    dc.flow = scr.flow;
                } else {
                    DcSolve full = solve_dc_contingency(inst, sol, t, k);
                    if (full.status != DcStatus::Ok)
                        return -std::numeric_limits<double>::infinity();
                    dc.flow = full.result.flow;
                }
                ctg_pen[t][k] = contingency_overload_penalty(inst, dc, sol, t, k);
            }
        }
    }
    CtgAggregate agg = ctg_aggregate(inst, ctg_pen);
    return assemble_objective(tables, agg).z_ms;
}

struct IncumbentWriter {
    const Instance& inst;
    std::string path;
    double best_score = -std::numeric_limits<double>::infinity();
    int seq = 0;
    std::vector<WriteRecord> records;

    void offer(const Solution& sol, double sc) {
        if (sc <= best_score) return;
        best_score = sc;
        if (!path.empty()) save_solution(inst, sol, path);
        records.push_back({seq++, sc});
    }
};

struct Clock {
    std::chrono::steady_clock::time_point deadline;
    bool enforce;

    bool expired() const {
        return enforce && std::chrono::steady_clock::now() >= deadline;
    }
};

std::vector<CandidateSchedule> propose_moves(const Instance& inst,
                                             const CandidateSchedule& cur,
                                             bool switch_search) {
    const int nt = inst.num_t();
    std::vector<CandidateSchedule> moves;
    auto push_device_move = [&](int j, int from, int to, double value) {
        CandidateSchedule m = cur;
        for (int t = from; t <= to; ++t) m.dev_u[m.idx(j, t)] = value;
        moves.push_back(std::move(m));
    };

    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        std::vector<int> u(nt);
        for (int t = 0; t < nt; ++t) u[t] = cur.dev_u[cur.idx(j, t)] >= 0.5 ? 1 : 0;
        std::vector<OnRun> runs = on_runs(u);
        for (const auto& r : runs) {
            if (!run_has_must_run(d, r)) push_device_move(j, r.start, r.end, 0.0);
            if (r.end > r.start) {
                push_device_move(j, r.start, r.start, 0.0);
                push_device_move(j, r.end, r.end, 0.0);
            }
            if (r.start > 0 && u[r.start - 1] == 0 && !d.forced_outage.count(r.start - 1))
                push_device_move(j, r.start - 1, r.start - 1, 1.0);
            if (r.end + 1 < nt && u[r.end + 1] == 0 && !d.forced_outage.count(r.end + 1))
                push_device_move(j, r.end + 1, r.end + 1, 1.0);
        }
        // Off gaps, including a fully offline device.
        int gap_start = -1;
        for (int t = 0; t <= nt; ++t) {
            const bool off = t < nt && u[t] == 0;
            if (off && gap_start < 0) gap_start = t;
            if (!off && gap_start >= 0) {
                bool blocked = false;
                for (int s = gap_start; s < t; ++s)
                    if (d.forced_outage.count(s)) blocked = true;
                if (!blocked) push_device_move(j, gap_start, t - 1, 1.0);
                gap_start = -1;
            }
        }
    }

    if (switch_search) {
        for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
            const double cur_u = cur.ac_u[cur.idx(j, 0)];
            CandidateSchedule m = cur;
            for (int t = 0; t < nt; ++t) m.ac_u[m.idx(j, t)] = cur_u >= 0.5 ? 0.0 : 1.0;
            if (cur_u >= 0.5) {
                // Opening must keep the base case and every contingency
                // connected.
                std::vector<int> status(inst.ac_branches.size(), 1);
                for (int b = 0; b < static_cast<int>(inst.ac_branches.size()); ++b)
                    status[b] = m.ac_u[m.idx(b, 0)] >= 0.5 ? 1 : 0;
                if (build_topology(inst, status).count > 1) continue;
                bool splits = false;
                for (const auto& ctg : inst.contingencies) {
                    if (ctg.branch < 0) continue;
                    if (build_topology(inst, status, std::make_pair(ctg.kind, ctg.branch))
                            .count > 1) {
                        splits = true;
                        break;
                    }
                }
                if (splits) continue;
            }
            moves.push_back(std::move(m));
        }
    }
    return moves;
}

bool schedules_equal(const CandidateSchedule& a, const CandidateSchedule& b) {
    return a.dev_u == b.dev_u && a.ac_u == b.ac_u;
}

void polish_loop(const Instance& inst, const SolverConfig& cfg, const Clock& clock,
                 Solution& best, Evaluation& best_eval, IncumbentWriter& writer) {
    CandidateSchedule cur = schedule_from_solution(inst, best);
    int evals_used = 0;

    const std::size_t cells = inst.devices.size() * inst.num_t();
    if (cells <= 10) {
        // Micro instance: sweep every feasible commitment pattern outright.
        const int nd = static_cast<int>(inst.devices.size());
        const int nt = inst.num_t();
        for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
            if (clock.expired()) break;
            CandidateSchedule cand = cur;
            bool feasible = true;
            for (int j = 0; j < nd && feasible; ++j) {
                std::vector<int> u(nt);
                for (int t = 0; t < nt; ++t) {
                    u[t] = (mask >> (j * nt + t)) & 1u;
                    cand.dev_u[cand.idx(j, t)] = u[t];
                }
                feasible = pattern_feasible(inst.devices[j], u, nt);
            }
            if (!feasible) continue;
            Solution sol = build_solution(inst, cand, cfg.newton);
            Evaluation ev = evaluate(inst, sol);
            ++evals_used;
            if (ev.feasibility.feasible && ev.score > best_eval.score + 1e-9) {
                best = std::move(sol);
                best_eval = std::move(ev);
                writer.offer(best, best_eval.score);
            }
        }
        return;
    }

    while (evals_used < cfg.polish_eval_cap && !clock.expired()) {
        std::vector<CandidateSchedule> raw = propose_moves(inst, cur, cfg.enable_switch_search);
        std::vector<CandidateSchedule> moves;
        for (auto& m : raw) {
            CandidateSchedule fin = finalize_schedule(inst, m);
            if (!schedules_equal(fin, cur)) moves.push_back(std::move(fin));
        }
        if (moves.empty()) break;

        // Rank by the fast estimate; evaluate exactly only the front-runners.
        std::vector<std::pair<double, int>> ranked;
        for (int m = 0; m < static_cast<int>(moves.size()); ++m) {
            Solution sol = build_solution(inst, moves[m], cfg.newton);
            ranked.emplace_back(fast_score_estimate(inst, sol, cfg.enable_lodf_screen), m);
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });

        const int to_try =
            std::min<int>({static_cast<int>(ranked.size()), 12,
                           cfg.polish_eval_cap - evals_used});
        int best_move = -1;
        double best_move_score = best_eval.score;
        Solution best_move_sol;
        Evaluation best_move_eval;
        for (int r = 0; r < to_try && !clock.expired(); ++r) {
            const int m = ranked[r].second;
            Solution sol = build_solution(inst, moves[m], cfg.newton);
            Evaluation ev = evaluate(inst, sol);
            ++evals_used;
            if (ev.feasibility.feasible && ev.score > best_move_score + 1e-9) {
                best_move = m;
                best_move_score = ev.score;
                best_move_sol = std::move(sol);
                best_move_eval = std::move(ev);
            }
        }
        if (best_move < 0) break;
        cur = moves[best_move];
        best = std::move(best_move_sol);
        best_eval = std::move(best_move_eval);
        writer.offer(best, best_eval.score);
    }
}

}  // namespace

SolveResult solve(const Instance& inst, const SolverConfig& cfg,
                  const std::string& out_path) {
    if (cfg.wall_clock_budget <= 0.0)
        throw BudgetTooSmall("wall clock budget must be positive");
    ValidationReport vr = validate_instance(inst);
    if (!vr.ok())
        throw std::invalid_argument("instance fails validation: " + vr.problems.front());

    Clock clock{std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(cfg.wall_clock_budget)),
                !cfg.iteration_capped};

    IncumbentWriter writer{inst, out_path};

    Solution best = fallback_solution(inst);
    Evaluation best_eval = evaluate(inst, best);
    if (!best_eval.feasibility.feasible)
        throw BudgetTooSmall("fallback solution is infeasible");
    writer.offer(best, best_eval.score);

    if (!clock.expired()) {
        CandidateSchedule sched =
            cfg.enable_batch_rounding
                ? batch_round(inst, uc_relaxation(inst), cfg.batches, cfg.round_threshold)
                : uc_phase(inst);
        Solution cand = build_solution(inst, sched, cfg.newton);
        Evaluation ev = evaluate(inst, cand);
        if (ev.feasibility.feasible && ev.score > best_eval.score) {
            best = std::move(cand);
            best_eval = std::move(ev);
            writer.offer(best, best_eval.score);
        }
    }

    if (!clock.expired()) polish_loop(inst, cfg, clock, best, best_eval, writer);

    SolveResult res;
    res.best = std::move(best);
    res.eval = std::move(best_eval);
    res.writes = std::move(writer.records);
    return res;
}

}  // namespace go3
