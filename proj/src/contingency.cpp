#include "go3/contingency.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "go3/acpf.hpp"

namespace go3 {

double system_slack(const Instance& inst, const Solution& sol, int t) {
    double slack = 0.0;
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const double p = sol.dev_p[sol.idx(j, t)];
        slack += inst.devices[j].is_producer() ? p : -p;
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        if (sh.bus < 0) continue;
        const double v = sol.bus_v[sol.idx(sh.bus, t)];
        slack -= shunt_flow(sh, sol.shunt_u[sol.idx(j, t)], v).real();
    }
    return slack;
}

namespace {

// Net real power injection per bus from devices, shunts, and DC branch flows,
// all fixed pre-contingency. An outaged DC branch's terms are dropped.
std::vector<double> dc_injections(const Instance& inst, const Solution& sol, int t,
                                  int outaged_dc) {
    const int nb = inst.num_buses();
    std::vector<double> inj(nb, 0.0);
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        if (d.bus < 0) continue;
        const double p = sol.dev_p[sol.idx(j, t)];
        inj[d.bus] += d.is_producer() ? p : -p;
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        if (sh.bus < 0) continue;
        const double v = sol.bus_v[sol.idx(sh.bus, t)];
        inj[sh.bus] -= shunt_flow(sh, sol.shunt_u[sol.idx(j, t)], v).real();
    }
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        if (j == outaged_dc) continue;
        const auto& br = inst.dc_branches[j];
        const double p_fr = sol.dc_p_fr[sol.idx(j, t)];
        // Flow into the branch is a withdrawal at each terminal; p_to = -p_fr.
        if (br.from >= 0) inj[br.from] -= p_fr;
        if (br.to >= 0) inj[br.to] += p_fr;
    }
    return inj;
}

std::vector<int> ac_status_at(const Instance& inst, const Solution& sol, int t) {
    std::vector<int> status(inst.ac_branches.size(), 1);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j)
        status[j] = sol.ac_u[sol.idx(j, t)] != 0.0 ? 1 : 0;
    return status;
}

struct ReducedLaplacian {
    Eigen::MatrixXd L;   // (nb-1) x (nb-1), reference bus removed
    int ref_bus = 0;
    bool singular = false;
    Eigen::FullPivLU<Eigen::MatrixXd> lu;

    void factorize() {
        lu.compute(L);
        singular = !lu.isInvertible();
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return lu.solve(b); }
};

// Weighted Laplacian over in-service AC branches with weights -u B_sr; the
// weights are usually positive but may not be, so factorization goes through
// a general LU.
ReducedLaplacian build_laplacian(const Instance& inst, const Solution& sol, int t,
                                 const std::vector<int>& ac_status, int outaged_ac) {
    const int nb = inst.num_buses();
    ReducedLaplacian rl;
    rl.ref_bus = 0;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nb, nb);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (j == outaged_ac || !ac_status[j]) continue;
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double w = -sol.ac_u[sol.idx(j, t)] * br.b_sr();
        L(br.from, br.from) += w;
        L(br.to, br.to) += w;
        L(br.from, br.to) -= w;
        L(br.to, br.from) -= w;
    }
    rl.L.resize(nb - 1, nb - 1);
    for (int i = 1; i < nb; ++i)
        for (int k = 1; k < nb; ++k) rl.L(i - 1, k - 1) = L(i, k);
    rl.factorize();
    return rl;
}

Eigen::VectorXd dc_rhs(const Instance& inst, const Solution& sol, int t,
                       const std::vector<int>& ac_status, int outaged_ac, int outaged_dc,
                       double p_slack) {
    const int nb = inst.num_buses();
    std::vector<double> inj = dc_injections(inst, sol, t, outaged_dc);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nb);
    for (int i = 0; i < nb; ++i) b(i) = inj[i] - inst.buses[i].alpha * p_slack;
    // Phase shifters enter as equivalent injections: +w*phi at from, -w*phi at to.
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (j == outaged_ac || !ac_status[j]) continue;
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double w = -sol.ac_u[sol.idx(j, t)] * br.b_sr();
        const double phi = sol.ac_phi[sol.idx(j, t)];
        b(br.from) += w * phi;
        b(br.to) -= w * phi;
    }
    return b;
}

void flows_from_angles(const Instance& inst, const Solution& sol, int t,
                       const std::vector<int>& ac_status, int outaged_ac,
                       const std::vector<double>& theta, std::vector<double>& flow) {
    flow.assign(inst.ac_branches.size(), 0.0);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (j == outaged_ac || !ac_status[j]) continue;
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double u = sol.ac_u[sol.idx(j, t)];
        flow[j] = -u * br.b_sr() *
                  (theta[br.from] - theta[br.to] - sol.ac_phi[sol.idx(j, t)]);
    }
}

}  // namespace

DcSolve solve_dc_contingency(const Instance& inst, const Solution& sol, int t, int k) {
    const int nb = inst.num_buses();
    DcSolve out;
    int outaged_ac = -1, outaged_dc = -1;
    std::optional<std::pair<BranchKind, int>> outage;
    if (k >= 0) {
        const auto& ctg = inst.contingencies[k];
        if (ctg.kind == BranchKind::Ac)
            outaged_ac = ctg.branch;
        else
            outaged_dc = ctg.branch;
        outage = {ctg.kind, ctg.branch};
    }

    const std::vector<int> status = ac_status_at(inst, sol, t);
    ComponentLabeling lab = build_topology(inst, status, outage);
    if (lab.count > 1) {
        out.status = DcStatus::Disconnected;
        out.components = lab.count;
        return out;
    }

    ReducedLaplacian rl = build_laplacian(inst, sol, t, status, outaged_ac);
    if (rl.singular) {
        out.status = DcStatus::Singular;
        return out;
    }

    const double p_slack = system_slack(inst, sol, t);
    Eigen::VectorXd b = dc_rhs(inst, sol, t, status, outaged_ac, outaged_dc, p_slack);
    Eigen::VectorXd theta_red = rl.solve(b.tail(nb - 1));

    out.result.p_slack = p_slack;
    out.result.theta.assign(nb, 0.0);
    for (int i = 1; i < nb; ++i) out.result.theta[i] = theta_red(i - 1);
    flows_from_angles(inst, sol, t, status, outaged_ac, out.result.theta, out.result.flow);
    return out;
}

double contingency_overload_penalty(const Instance& inst, const DcContingencyResult& dc,
                                    const Solution& sol, int t, int k,
                                    std::vector<double>* per_branch) {
    const auto& ctg = inst.contingencies[k];
    const double d_t = inst.intervals[t].duration;
    const double c_s = inst.penalties.c_s;
    if (per_branch) per_branch->assign(inst.ac_branches.size(), 0.0);

    double total = 0.0;
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (ctg.kind == BranchKind::Ac && ctg.branch == j) continue;
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double u = sol.ac_u[sol.idx(j, t)];
        if (u == 0.0) continue;
        const Complex w_fr = complex_voltage(sol.bus_v[sol.idx(br.from, t)],
                                             sol.bus_theta[sol.idx(br.from, t)]);
        const Complex w_to = complex_voltage(sol.bus_v[sol.idx(br.to, t)],
                                             sol.bus_theta[sol.idx(br.to, t)]);
        BranchFlowResult base = branch_flow(br, u, sol.ac_tau[sol.idx(j, t)],
                                            sol.ac_phi[sol.idx(j, t)], w_fr, w_to);
        // The reactive term takes the larger magnitude of the two base-case
        // side flows; a signed max would understate loading.
        const double q = std::max(std::abs(base.q_fr()), std::abs(base.q_to()));
        const double p = dc.flow[j];
        const double loading = std::sqrt(p * p + q * q);
        const double z = d_t * c_s * std::max(0.0, loading - br.s_max_ctg);
        if (per_branch) (*per_branch)[j] = z;
        total += z;
    }
    return total;
}

CtgAggregate ctg_aggregate(const Instance& inst,
                           const std::vector<std::vector<double>>& penalties) {
    const int nt = inst.num_t();
    const int nk = static_cast<int>(inst.contingencies.size());
    CtgAggregate agg;
    agg.worst_t.assign(nt, 0.0);
    agg.avg_t.assign(nt, 0.0);
    if (nk == 0) return agg;
    for (int t = 0; t < nt; ++t) {
        double worst = 0.0, sum = 0.0;
        for (int k = 0; k < nk; ++k) {
            const double z = penalties[t][k];
            worst = std::max(worst, z);
            sum += z;
        }
        agg.worst_t[t] = worst;
        agg.avg_t[t] = sum / nk;
        agg.worst_total += worst;
        agg.avg_total += agg.avg_t[t];
    }
    return agg;
}

ConnectivityReport check_connectivity(const Instance& inst, const Solution& sol) {
    ConnectivityReport rep;
    for (int t = 0; t < inst.num_t(); ++t) {
        const std::vector<int> status = ac_status_at(inst, sol, t);
        ComponentLabeling base = build_topology(inst, status);
        if (base.count > 1) rep.violations.push_back({t, -1, base.count});
        for (int k = 0; k < static_cast<int>(inst.contingencies.size()); ++k) {
            const auto& ctg = inst.contingencies[k];
            if (ctg.branch < 0) continue;
            ComponentLabeling lab =
                build_topology(inst, status, std::make_pair(ctg.kind, ctg.branch));
            if (lab.count > 1) rep.violations.push_back({t, k, lab.count});
        }
    }
    return rep;
}

namespace {

struct BaseFactor {
    ReducedLaplacian rl;
    Eigen::VectorXd rhs;  // reduced right-hand side of the base solve
};

}  // namespace

DcBaseState solve_dc_base(const Instance& inst, const Solution& sol, int t) {
    const int nb = inst.num_buses();
    DcBaseState st;
    st.ac_status = ac_status_at(inst, sol, t);
    st.ref_bus = 0;

    auto holder = std::make_shared<BaseFactor>();
    holder->rl = build_laplacian(inst, sol, t, st.ac_status, -1);
    const double p_slack = system_slack(inst, sol, t);
    Eigen::VectorXd b = dc_rhs(inst, sol, t, st.ac_status, -1, -1, p_slack);
    holder->rhs = b.tail(nb - 1);

    st.base.p_slack = p_slack;
    st.base.theta.assign(nb, 0.0);
    if (!holder->rl.singular) {
        Eigen::VectorXd theta_red = holder->rl.solve(holder->rhs);
        for (int i = 1; i < nb; ++i) st.base.theta[i] = theta_red(i - 1);
    }
    flows_from_angles(inst, sol, t, st.ac_status, -1, st.base.theta, st.base.flow);
    st.factor = std::static_pointer_cast<const void>(holder);
    return st;
}

LodfScreen lodf_screen(const Instance& inst, const DcBaseState& base, const Solution& sol,
                       int t, int k) {
    const int nb = inst.num_buses();
    const auto& ctg = inst.contingencies[k];
    LodfScreen out;
    const auto* holder = static_cast<const BaseFactor*>(base.factor.get());

    if (ctg.kind == BranchKind::Dc) {
        // Removing a DC branch only changes injections; the base factorization
        // still applies exactly.
        const auto& br = inst.dc_branches[ctg.branch];
        const double p_fr = sol.dc_p_fr[sol.idx(ctg.branch, t)];
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(nb);
        if (br.from >= 0) delta(br.from) += p_fr;
        if (br.to >= 0) delta(br.to) -= p_fr;
        Eigen::VectorXd theta_red = holder->rl.solve(holder->rhs + delta.tail(nb - 1));
        std::vector<double> theta(nb, 0.0);
        for (int i = 1; i < nb; ++i) theta[i] = theta_red(i - 1);
        flows_from_angles(inst, sol, t, base.ac_status, -1, theta, out.flow);
        return out;
    }

    const int o = ctg.branch;
    const auto& br = inst.ac_branches[o];
    out.flow = base.base.flow;
    if (!base.ac_status[o] || br.from < 0 || br.to < 0) {
        // Branch already out of service in the base case: nothing changes.
        return out;
    }

    const double w_o = -sol.ac_u[sol.idx(o, t)] * br.b_sr();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nb);
    a(br.from) += 1.0;
    a(br.to) -= 1.0;
    Eigen::VectorXd y_red = holder->rl.solve(a.tail(nb - 1));
    std::vector<double> y(nb, 0.0);
    for (int i = 1; i < nb; ++i) y[i] = y_red(i - 1);

    const double denom = 1.0 - w_o * (y[br.from] - y[br.to]);
    if (std::abs(denom) < 1e-9) {
        out.status = LodfStatus::BridgeOutage;
        out.flow.clear();
        return out;
    }

    const double f0 = base.base.flow[o];
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        if (j == o || !base.ac_status[j]) continue;
        const auto& bj = inst.ac_branches[j];
        if (bj.from < 0 || bj.to < 0) continue;
        const double w_j = -sol.ac_u[sol.idx(j, t)] * bj.b_sr();
        const double lodf = w_j * (y[bj.from] - y[bj.to]) / denom;
        out.flow[j] = base.base.flow[j] + lodf * f0;
    }
    out.flow[o] = 0.0;
    return out;
}

}  // namespace go3
