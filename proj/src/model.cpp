#include "go3/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace go3 {

double PwlCurve::total_width() const {
    double w = 0.0;
    for (const auto& b : blocks) w += b.width;
    return w;
}

double PwlCurve::value(double p) const {
    double acc = 0.0;
    double q = p;
    for (const auto& b : blocks) {
        if (q <= 0.0) break;
        double take = std::min(q, b.width);
        acc += take * b.price;
        q -= take;
    }
    return acc;
}

bool PwlCurve::contains(double p, double tol) const {
    return p >= -tol && p <= total_width() + tol;
}

UnionFind::UnionFind(int n) : parent_(n), size_(n, 1), count_(n) {
    for (int i = 0; i < n; ++i) parent_[i] = i;
}

int UnionFind::find(int x) {
    int root = x;
    while (root != parent_[root]) root = parent_[root];
    while (x != root) {
        int next = parent_[x];
        parent_[x] = root;
        x = next;
    }
    return root;
}

void UnionFind::merge(int x, int y) {
    int a = find(x), b = find(y);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --count_;
}

LookbackWindows derive_lookback_windows(double min_uptime, double min_downtime,
                                        const std::vector<Interval>& intervals) {
    const int nt = static_cast<int>(intervals.size());
    LookbackWindows w;
    w.up.resize(nt);
    w.dn.resize(nt);
    for (int t = 0; t < nt; ++t) {
        // Walk backwards accumulating the duration of [tp, t-1]. A switch at
        // tp followed by the opposite switch at t leaves exactly that much
        // time in between.
        double span = 0.0;
        for (int tp = t - 1; tp >= 0; --tp) {
            span += intervals[tp].duration;
            if (span < min_downtime) w.dn[t].push_back(tp);
            if (span < min_uptime) w.up[t].push_back(tp);
            if (span >= min_downtime && span >= min_uptime) break;
        }
        std::sort(w.up[t].begin(), w.up[t].end());
        std::sort(w.dn[t].begin(), w.dn[t].end());
    }
    return w;
}

void Instance::finalize() {
    bus_index.clear();
    device_index.clear();
    shunt_index.clear();
    ac_index.clear();
    dc_index.clear();
    zone_index.clear();
    ctg_index.clear();

    for (int i = 0; i < static_cast<int>(buses.size()); ++i) bus_index[buses[i].id] = i;
    for (int j = 0; j < static_cast<int>(devices.size()); ++j) device_index[devices[j].id] = j;
    for (int j = 0; j < static_cast<int>(shunts.size()); ++j) shunt_index[shunts[j].id] = j;
    for (int j = 0; j < static_cast<int>(ac_branches.size()); ++j) ac_index[ac_branches[j].id] = j;
    for (int j = 0; j < static_cast<int>(dc_branches.size()); ++j) dc_index[dc_branches[j].id] = j;
    for (int n = 0; n < static_cast<int>(zones.size()); ++n) zone_index[zones[n].id] = n;
    for (int k = 0; k < static_cast<int>(contingencies.size()); ++k) ctg_index[contingencies[k].id] = k;

    auto lookup = [](const std::unordered_map<std::string, int>& m, const std::string& key) {
        auto it = m.find(key);
        return it == m.end() ? -1 : it->second;
    };

    const int nb = num_buses();
    for (auto& b : buses) b.alpha = nb > 0 ? 1.0 / nb : 0.0;

    producers_at_bus.assign(nb, {});
    consumers_at_bus.assign(nb, {});
    shunts_at_bus.assign(nb, {});
    ac_from_bus.assign(nb, {});
    ac_to_bus.assign(nb, {});
    dc_from_bus.assign(nb, {});
    dc_to_bus.assign(nb, {});
    zones_of_device.assign(devices.size(), {});

    for (int j = 0; j < static_cast<int>(devices.size()); ++j) {
        auto& d = devices[j];
        d.bus = lookup(bus_index, d.bus_id);
        if (d.bus >= 0) {
            (d.is_producer() ? producers_at_bus : consumers_at_bus)[d.bus].push_back(j);
        }
        LookbackWindows w = derive_lookback_windows(d.min_uptime, d.min_downtime, intervals);
        d.up_window = std::move(w.up);
        d.dn_window = std::move(w.dn);
    }
    for (int j = 0; j < static_cast<int>(shunts.size()); ++j) {
        auto& s = shunts[j];
        s.bus = lookup(bus_index, s.bus_id);
        if (s.bus >= 0) shunts_at_bus[s.bus].push_back(j);
    }
    for (int j = 0; j < static_cast<int>(ac_branches.size()); ++j) {
        auto& br = ac_branches[j];
        br.from = lookup(bus_index, br.from_id);
        br.to = lookup(bus_index, br.to_id);
        if (br.from >= 0) ac_from_bus[br.from].push_back(j);
        if (br.to >= 0) ac_to_bus[br.to].push_back(j);
    }
    for (int j = 0; j < static_cast<int>(dc_branches.size()); ++j) {
        auto& br = dc_branches[j];
        br.from = lookup(bus_index, br.from_id);
        br.to = lookup(bus_index, br.to_id);
        if (br.from >= 0) dc_from_bus[br.from].push_back(j);
        if (br.to >= 0) dc_to_bus[br.to].push_back(j);
    }
    for (int n = 0; n < static_cast<int>(zones.size()); ++n) {
        auto& z = zones[n];
        z.members.clear();
        for (const auto& mid : z.member_ids) {
            int j = lookup(device_index, mid);
            z.members.push_back(j);
            if (j >= 0) zones_of_device[j].push_back(n);
        }
    }
    for (auto& c : contingencies) {
        int ja = lookup(ac_index, c.branch_id);
        int jd = lookup(dc_index, c.branch_id);
        if (ja >= 0) {
            c.kind = BranchKind::Ac;
            c.branch = ja;
        } else if (jd >= 0) {
            c.kind = BranchKind::Dc;
            c.branch = jd;
        } else {
            c.branch = -1;
        }
    }
}

Solution Solution::sized_for(const Instance& inst) {
    Solution s;
    s.nt = inst.num_t();
    const size_t nb = inst.buses.size() * s.nt;
    const size_t nd = inst.devices.size() * s.nt;
    const size_t ns = inst.shunts.size() * s.nt;
    const size_t na = inst.ac_branches.size() * s.nt;
    const size_t ndc = inst.dc_branches.size() * s.nt;
    s.bus_v.assign(nb, 1.0);
    s.bus_theta.assign(nb, 0.0);
    s.dev_p.assign(nd, 0.0);
    s.dev_q.assign(nd, 0.0);
    s.dev_u.assign(nd, 0.0);
    s.dev_u_su.assign(nd, 0.0);
    s.dev_u_sd.assign(nd, 0.0);
    s.dev_p_rsv.assign(nd, 0.0);
    s.shunt_u.assign(ns, 0.0);
    s.ac_u.assign(na, 1.0);
    s.ac_u_su.assign(na, 0.0);
    s.ac_u_sd.assign(na, 0.0);
    s.ac_tau.assign(na, 1.0);
    s.ac_phi.assign(na, 0.0);
    s.dc_p_fr.assign(ndc, 0.0);
    s.dc_q_fr.assign(ndc, 0.0);
    s.dc_q_to.assign(ndc, 0.0);
    return s;
}

bool Solution::all_finite() const {
    auto fin = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return fin(bus_v) && fin(bus_theta) && fin(dev_p) && fin(dev_q) && fin(dev_u) &&
           fin(dev_u_su) && fin(dev_u_sd) && fin(dev_p_rsv) && fin(shunt_u) && fin(ac_u) &&
           fin(ac_u_su) && fin(ac_u_sd) && fin(ac_tau) && fin(ac_phi) && fin(dc_p_fr) &&
           fin(dc_q_fr) && fin(dc_q_to);
}

namespace {

template <typename... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

}  // namespace

ValidationReport validate_instance(const Instance& inst) {
    ValidationReport rep;
    auto bad = [&rep](std::string msg) { rep.problems.push_back(std::move(msg)); };

    const int nt = inst.num_t();
    if (nt == 0) bad("instance has no intervals");
    for (int t = 0; t < nt; ++t) {
        if (inst.intervals[t].id != t)
            bad(cat("interval ids not contiguous at position ", t));
        if (!(inst.intervals[t].duration > 0.0))
            bad(cat("interval ", t, " duration must be positive"));
    }

    for (const auto& b : inst.buses) {
        if (!(b.v_min > 0.0)) bad(cat("bus ", b.id, ": v_min must be positive"));
        if (b.v_min > b.v_max) bad(cat("bus ", b.id, ": v_min > v_max"));
    }

    auto check_len = [&](const std::string& who, const std::string& field, size_t n) {
        if (static_cast<int>(n) != nt)
            bad(cat(who, ": ", field, " has ", n, " entries, expected ", nt));
    };

    for (const auto& d : inst.devices) {
        const std::string who = cat("device ", d.id);
        if (d.bus < 0) bad(cat(who, ": references unknown bus '", d.bus_id, "'"));
        if (d.u0 != 0 && d.u0 != 1) bad(cat(who, ": u0 must be 0 or 1"));
        if (d.u0 == 0 && d.p0 != 0.0) bad(cat(who, ": p0 must be 0 when u0 = 0"));
        if (d.ramp_up < 0 || d.ramp_down < 0 || d.ramp_startup < 0 || d.ramp_shutdown < 0)
            bad(cat(who, ": ramp rates must be nonnegative"));
        check_len(who, "p_min", d.p_min.size());
        check_len(who, "p_max", d.p_max.size());
        check_len(who, "q_min", d.q_min.size());
        check_len(who, "q_max", d.q_max.size());
        check_len(who, "reserve_max", d.reserve_max.size());
        check_len(who, "cost", d.cost.size());
        for (int t = 0; t < nt && t < static_cast<int>(d.p_min.size()) &&
                        t < static_cast<int>(d.p_max.size());
             ++t) {
            if (d.p_min[t] > d.p_max[t])
                bad(cat(who, ": p_min > p_max in interval ", t));
        }
        for (int t = 0; t < nt && t < static_cast<int>(d.q_min.size()) &&
                        t < static_cast<int>(d.q_max.size());
             ++t) {
            if (d.q_min[t] > d.q_max[t])
                bad(cat(who, ": q_min > q_max in interval ", t));
        }
        for (int t = 0; t < static_cast<int>(d.cost.size()); ++t) {
            const auto& curve = d.cost[t];
            double prev = d.is_producer() ? -1e300 : 1e300;
            for (const auto& blk : curve.blocks) {
                if (blk.width < 0) bad(cat(who, ": negative block width in interval ", t));
                if (d.is_producer() && blk.price < prev - 1e-12)
                    bad(cat(who, ": producer marginal prices must be nondecreasing (interval ", t, ")"));
                if (!d.is_producer() && blk.price > prev + 1e-12)
                    bad(cat(who, ": consumer marginal prices must be nonincreasing (interval ", t, ")"));
                prev = blk.price;
            }
            if (t < static_cast<int>(d.p_max.size()) &&
                curve.total_width() < d.p_max[t] - 1e-9)
                bad(cat(who, ": energy curve does not cover [0, p_max] in interval ", t));
        }
        for (int t : d.must_run)
            if (d.forced_outage.count(t))
                bad(cat(who, ": interval ", t, " both must-run and forced-outage"));
        for (int t : d.must_run)
            if (t < 0 || t >= nt) bad(cat(who, ": must_run interval ", t, " out of range"));
        for (int t : d.forced_outage)
            if (t < 0 || t >= nt) bad(cat(who, ": forced_outage interval ", t, " out of range"));
        if (d.min_uptime < 0 || d.min_downtime < 0)
            bad(cat(who, ": min up/down times must be nonnegative"));
        for (const auto& cw : d.max_startups) {
            if (cw.limit < 0) bad(cat(who, ": max_startups limit negative"));
            for (int t : cw.intervals)
                if (t < 0 || t >= nt) bad(cat(who, ": max_startups interval out of range"));
        }
        for (const auto& cw : d.max_shutdowns) {
            if (cw.limit < 0) bad(cat(who, ": max_shutdowns limit negative"));
            for (int t : cw.intervals)
                if (t < 0 || t >= nt) bad(cat(who, ": max_shutdowns interval out of range"));
        }
        for (const auto& ec : d.energy_constraints) {
            for (const auto& [t, a] : ec.coeffs) {
                (void)a;
                if (t < 0 || t >= nt)
                    bad(cat(who, ": energy constraint references interval ", t, " out of range"));
            }
        }
    }

    for (const auto& s : inst.shunts) {
        if (s.bus < 0) bad(cat("shunt ", s.id, ": references unknown bus '", s.bus_id, "'"));
        if (s.u_min > s.u_max) bad(cat("shunt ", s.id, ": u_min > u_max"));
    }

    for (const auto& br : inst.ac_branches) {
        const std::string who = cat("ac_branch ", br.id);
        if (br.from < 0) bad(cat(who, ": references unknown bus '", br.from_id, "'"));
        if (br.to < 0) bad(cat(who, ": references unknown bus '", br.to_id, "'"));
        if (br.from >= 0 && br.from == br.to) bad(cat(who, ": from and to bus coincide"));
        if (!(br.tau_min > 0)) bad(cat(who, ": tau_min must be positive"));
        if (br.tau_min > br.tau_max) bad(cat(who, ": tau_min > tau_max"));
        if (br.phi_min > br.phi_max) bad(cat(who, ": phi_min > phi_max"));
        if (!(br.s_max > 0)) bad(cat(who, ": s_max must be positive"));
        if (!(br.s_max_ctg > 0)) bad(cat(who, ": s_max_ctg must be positive"));
        if (br.u0 != 0 && br.u0 != 1) bad(cat(who, ": u0 must be 0 or 1"));
    }

    for (const auto& br : inst.dc_branches) {
        const std::string who = cat("dc_branch ", br.id);
        if (br.from < 0) bad(cat(who, ": references unknown bus '", br.from_id, "'"));
        if (br.to < 0) bad(cat(who, ": references unknown bus '", br.to_id, "'"));
        if (br.from >= 0 && br.from == br.to) bad(cat(who, ": from and to bus coincide"));
        if (br.p_max < 0) bad(cat(who, ": p_max must be nonnegative"));
        if (br.q_min_fr > br.q_max_fr) bad(cat(who, ": q_min_fr > q_max_fr"));
        if (br.q_min_to > br.q_max_to) bad(cat(who, ": q_min_to > q_max_to"));
    }

    for (const auto& z : inst.zones) {
        if (z.sigma < 0) bad(cat("zone ", z.id, ": sigma must be nonnegative"));
        if (z.shortage_penalty < 0) bad(cat("zone ", z.id, ": shortage_penalty must be nonnegative"));
        for (size_t m = 0; m < z.members.size(); ++m)
            if (z.members[m] < 0)
                bad(cat("zone ", z.id, ": references unknown device '", z.member_ids[m], "'"));
    }

    for (const auto& c : inst.contingencies) {
        if (c.branch < 0)
            bad(cat("contingency ", c.id, ": references unknown branch '", c.branch_id, "'"));
        if (inst.ac_index.count(c.branch_id) && inst.dc_index.count(c.branch_id))
            bad(cat("contingency ", c.id, ": branch id '", c.branch_id, "' is ambiguous"));
    }

    const auto& pen = inst.penalties;
    if (pen.c_p < 0 || pen.c_q < 0 || pen.c_s < 0 || pen.c_sw < 0 || pen.c_en < 0)
        bad("penalty coefficients must be nonnegative");

    auto dup_check = [&](const char* what, const auto& items) {
        std::set<std::string> seen;
        for (const auto& item : items)
            if (!seen.insert(item.id).second) bad(cat("duplicate ", what, " id '", item.id, "'"));
    };
    dup_check("bus", inst.buses);
    dup_check("device", inst.devices);
    dup_check("shunt", inst.shunts);
    dup_check("ac_branch", inst.ac_branches);
    dup_check("dc_branch", inst.dc_branches);
    dup_check("zone", inst.zones);
    dup_check("contingency", inst.contingencies);

    return rep;
}

ComponentLabeling build_topology(const Instance& inst, const std::vector<int>& ac_status,
                                 std::optional<std::pair<BranchKind, int>> outage) {
    const int nb = inst.num_buses();
    UnionFind uf(nb);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (outage && outage->first == BranchKind::Ac && outage->second == j) continue;
        if (j < static_cast<int>(ac_status.size()) && ac_status[j] == 0) continue;
        const auto& br = inst.ac_branches[j];
        if (br.from >= 0 && br.to >= 0) uf.merge(br.from, br.to);
    }
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        if (outage && outage->first == BranchKind::Dc && outage->second == j) continue;
        const auto& br = inst.dc_branches[j];
        if (br.from >= 0 && br.to >= 0) uf.merge(br.from, br.to);
    }
    ComponentLabeling lab;
    lab.component.resize(nb);
    std::unordered_map<int, int> remap;
    for (int i = 0; i < nb; ++i) {
        int root = uf.find(i);
        auto [it, inserted] = remap.emplace(root, static_cast<int>(remap.size()));
        lab.component[i] = it->second;
    }
    lab.count = static_cast<int>(remap.size());
    return lab;
}

}  // namespace go3
