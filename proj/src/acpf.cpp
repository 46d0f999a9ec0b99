#include "go3/acpf.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace go3 {

ComplexVoltageState ComplexVoltageState::flat(int num_buses) {
    ComplexVoltageState st;
    st.v.assign(num_buses, 1.0);
    st.theta.assign(num_buses, 0.0);
    st.w.assign(num_buses, Complex{1.0, 0.0});
    return st;
}

ComplexVoltageState ComplexVoltageState::from_solution(const Instance& inst, const Solution& sol,
                                                       int t) {
    ComplexVoltageState st;
    const int nb = inst.num_buses();
    st.v.resize(nb);
    st.theta.resize(nb);
    st.w.resize(nb);
    for (int i = 0; i < nb; ++i) {
        st.v[i] = sol.bus_v[sol.idx(i, t)];
        st.theta[i] = sol.bus_theta[sol.idx(i, t)];
        st.w[i] = complex_voltage(st.v[i], st.theta[i]);
    }
    return st;
}

Complex complex_voltage(double v, double theta) {
    return Complex(v * std::cos(theta), v * std::sin(theta));
}

Complex s_function(Complex w, Complex wp, Complex Y, Complex Yp) {
    return std::conj(Yp) * w * std::conj(w) + std::conj(Y) * w * std::conj(w - wp);
}

BranchFlowResult branch_flow(const AcBranch& br, double u, double tau, double phi,
                             Complex w_fr, Complex w_to) {
    BranchFlowResult r;
    if (u == 0.0) return r;
    const Complex nu = tau * Complex(std::cos(phi), std::sin(phi));
    const Complex w_fr_eff = w_fr / nu;
    r.s_fr = u * s_function(w_fr_eff, w_to, br.y_sr, br.y_fr);
    r.s_to = u * s_function(w_to, w_fr_eff, br.y_sr, br.y_to);
    return r;
}

Complex shunt_flow(const Shunt& sh, double u_steps, double v) {
    return std::conj(sh.y_step) * u_steps * v * v;
}

namespace {

// Device and DC-branch injections are constant during a power-flow solve;
// collect them once per bus.
std::vector<Complex> fixed_bus_terms(const Instance& inst, const Solution& sol, int t) {
    const int nb = inst.num_buses();
    std::vector<Complex> c(nb, Complex{0.0, 0.0});
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j) {
        const auto& d = inst.devices[j];
        if (d.bus < 0) continue;
        const Complex s(sol.dev_p[sol.idx(j, t)], sol.dev_q[sol.idx(j, t)]);
        if (d.is_producer())
            c[d.bus] -= s;
        else
            c[d.bus] += s;
    }
    for (int j = 0; j < static_cast<int>(inst.dc_branches.size()); ++j) {
        const auto& br = inst.dc_branches[j];
        const double p_fr = sol.dc_p_fr[sol.idx(j, t)];
        if (br.from >= 0) c[br.from] += Complex(p_fr, sol.dc_q_fr[sol.idx(j, t)]);
        if (br.to >= 0) c[br.to] += Complex(-p_fr, sol.dc_q_to[sol.idx(j, t)]);
    }
    return c;
}

}  // namespace

std::vector<Complex> pf_mismatch(const Instance& inst, const Solution& fixed, int t,
                                 const ComplexVoltageState& state) {
    std::vector<Complex> m = fixed_bus_terms(inst, fixed, t);
    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double u = fixed.ac_u[fixed.idx(j, t)];
        if (u == 0.0) continue;
        BranchFlowResult f = branch_flow(br, u, fixed.ac_tau[fixed.idx(j, t)],
                                         fixed.ac_phi[fixed.idx(j, t)], state.w[br.from],
                                         state.w[br.to]);
        m[br.from] += f.s_fr;
        m[br.to] += f.s_to;
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        if (sh.bus < 0) continue;
        m[sh.bus] += shunt_flow(sh, fixed.shunt_u[fixed.idx(j, t)], state.v[sh.bus]);
    }
    return m;
}

std::vector<Complex> bus_imbalance(const Instance& inst, const Solution& sol, int t) {
    return pf_mismatch(inst, sol, t, ComplexVoltageState::from_solution(inst, sol, t));
}

namespace {

struct JacobianAccum {
    // Stacked real system: rows/cols ordered [theta at free buses; v at free buses].
    Eigen::MatrixXd J;
    const std::vector<int>& free_of_bus;  // -1 for slack
    int n_free;

    JacobianAccum(const std::vector<int>& fob, int nf)
        : J(Eigen::MatrixXd::Zero(2 * nf, 2 * nf)), free_of_bus(fob), n_free(nf) {}

    // d(s at bus `row`)/d(theta or v at bus `col`).
    void add(int row_bus, int col_bus, Complex ds_dtheta, Complex ds_dv) {
        const int r = free_of_bus[row_bus];
        const int c = free_of_bus[col_bus];
        if (r < 0 || c < 0) return;
        J(r, c) += ds_dtheta.real();
        J(n_free + r, c) += ds_dtheta.imag();
        J(r, n_free + c) += ds_dv.real();
        J(n_free + r, n_free + c) += ds_dv.imag();
    }
};

// One side of a branch flow written as s = A v_a^2 + B w_a conj(w_b); the
// four partials follow from that form.
void accumulate_side(JacobianAccum& acc, int bus_a, int bus_b, Complex A, Complex B,
                     const ComplexVoltageState& st, int row_bus) {
    const Complex wa = st.w[bus_a], wb = st.w[bus_b];
    const double va = std::max(st.v[bus_a], 1e-9);
    const double vb = std::max(st.v[bus_b], 1e-9);
    const Complex cross = B * wa * std::conj(wb);
    const Complex i_unit(0.0, 1.0);
    acc.add(row_bus, bus_a, i_unit * cross, 2.0 * A * va + cross / va);
    acc.add(row_bus, bus_b, -i_unit * cross, cross / vb);
}

}  // namespace

std::vector<double> pf_jacobian(const Instance& inst, const Solution& fixed, int t,
                                const ComplexVoltageState& state, int slack_bus) {
    const int nb = inst.num_buses();
    std::vector<int> free_of_bus(nb, -1);
    int n_free = 0;
    for (int i = 0; i < nb; ++i)
        if (i != slack_bus) free_of_bus[i] = n_free++;

    JacobianAccum acc(free_of_bus, n_free);

    for (int j = 0; j < static_cast<int>(inst.ac_branches.size()); ++j) {
        const auto& br = inst.ac_branches[j];
        if (br.from < 0 || br.to < 0) continue;
        const double u = fixed.ac_u[fixed.idx(j, t)];
        if (u == 0.0) continue;
        const double tau = fixed.ac_tau[fixed.idx(j, t)];
        const double phi = fixed.ac_phi[fixed.idx(j, t)];
        const Complex nu = tau * Complex(std::cos(phi), std::sin(phi));
        const double nu2 = std::norm(nu);

        const Complex A_fr = u * (std::conj(br.y_fr) + std::conj(br.y_sr)) / nu2;
        const Complex B_fr = -u * std::conj(br.y_sr) / nu;
        accumulate_side(acc, br.from, br.to, A_fr, B_fr, state, br.from);

        const Complex A_to = u * (std::conj(br.y_to) + std::conj(br.y_sr));
        const Complex B_to = -u * std::conj(br.y_sr) / std::conj(nu);
        accumulate_side(acc, br.to, br.from, A_to, B_to, state, br.to);
    }
    for (int j = 0; j < static_cast<int>(inst.shunts.size()); ++j) {
        const auto& sh = inst.shunts[j];
        if (sh.bus < 0) continue;
        const double u = fixed.shunt_u[fixed.idx(j, t)];
        acc.add(sh.bus, sh.bus, Complex{0.0, 0.0},
                2.0 * std::conj(sh.y_step) * u * state.v[sh.bus]);
    }

    std::vector<double> out(acc.J.size());
    Eigen::Map<Eigen::MatrixXd>(out.data(), 2 * n_free, 2 * n_free) = acc.J;
    return out;
}

PowerFlowResult solve_power_flow(const Instance& inst, const Solution& fixed, int t,
                                 int slack_bus, const NewtonOptions& opts) {
    return solve_power_flow(inst, fixed, t, slack_bus,
                            ComplexVoltageState::flat(inst.num_buses()), opts);
}

PowerFlowResult solve_power_flow(const Instance& inst, const Solution& fixed, int t,
                                 int slack_bus, const ComplexVoltageState& start,
                                 const NewtonOptions& opts) {
    const int nb = inst.num_buses();
    PowerFlowResult res;
    res.state = start;

    std::vector<int> free_of_bus(nb, -1);
    std::vector<int> bus_of_free;
    for (int i = 0; i < nb; ++i)
        if (i != slack_bus) {
            free_of_bus[i] = static_cast<int>(bus_of_free.size());
            bus_of_free.push_back(i);
        }
    const int nf = static_cast<int>(bus_of_free.size());

    auto mismatch_norm = [&](const std::vector<Complex>& m) {
        double worst = 0.0;
        for (int i = 0; i < nb; ++i)
            if (i != slack_bus) worst = std::max(worst, std::abs(m[i]));
        return worst;
    };

    std::vector<Complex> m = pf_mismatch(inst, fixed, t, res.state);
    double norm = mismatch_norm(m);

    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        if (norm < opts.tol) {
            res.status = PfStatus::Converged;
            res.final_mismatch = norm;
            return res;
        }
        std::vector<double> jac = pf_jacobian(inst, fixed, t, res.state, slack_bus);
        Eigen::Map<Eigen::MatrixXd> J(jac.data(), 2 * nf, 2 * nf);
        Eigen::VectorXd rhs(2 * nf);
        for (int f = 0; f < nf; ++f) {
            rhs(f) = -m[bus_of_free[f]].real();
            rhs(nf + f) = -m[bus_of_free[f]].imag();
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            res.status = PfStatus::SingularJacobian;
            res.final_mismatch = norm;
            return res;
        }
        Eigen::VectorXd dx = lu.solve(rhs);

        // Step halving when the mismatch gets worse, up to 4 times.
        ComplexVoltageState base = res.state;
        double step = 1.0;
        for (int halving = 0;; ++halving) {
            for (int f = 0; f < nf; ++f) {
                const int i = bus_of_free[f];
                res.state.theta[i] = base.theta[i] + step * dx(f);
                res.state.v[i] = std::max(1e-4, base.v[i] + step * dx(nf + f));
                res.state.w[i] = complex_voltage(res.state.v[i], res.state.theta[i]);
            }
            std::vector<Complex> m_new = pf_mismatch(inst, fixed, t, res.state);
            double norm_new = mismatch_norm(m_new);
            if (norm_new <= norm || halving >= 4) {
                m = std::move(m_new);
                norm = norm_new;
                break;
            }
            step *= 0.5;
        }
    }

    res.status = norm < opts.tol ? PfStatus::Converged : PfStatus::NonConvergence;
    res.final_mismatch = norm;
    return res;
}

}  // namespace go3
