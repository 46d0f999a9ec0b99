#pragma once

#include <vector>

#include "go3/model.hpp"

namespace go3 {

struct ComplexVoltageState {
    std::vector<Complex> w;      // per bus
    std::vector<double> v, theta;

    static ComplexVoltageState flat(int num_buses);
    static ComplexVoltageState from_solution(const Instance& inst, const Solution& sol, int t);
};

struct BranchFlowResult {
    Complex s_fr{0.0, 0.0};
    Complex s_to{0.0, 0.0};

    double p_fr() const { return s_fr.real(); }
    double q_fr() const { return s_fr.imag(); }
    double p_to() const { return s_to.real(); }
    double q_to() const { return s_to.imag(); }
};

Complex complex_voltage(double v, double theta);

// S(w, w', Y, Y') = Y'^* w w^* + Y^* w (w - w')^*
Complex s_function(Complex w, Complex wp, Complex Y, Complex Yp);

// Flows into the branch at each terminal. With u = 0 both flows are exactly
// zero; otherwise s_fr = u S(w_fr/nu, w_to, Y_sr, Y_fr) and
// s_to = u S(w_to, w_fr/nu, Y_sr, Y_to) with nu = tau e^{i phi}.
BranchFlowResult branch_flow(const AcBranch& br, double u, double tau, double phi,
                             Complex w_fr, Complex w_to);

// conj(Y_sh) * u * v^2
Complex shunt_flow(const Shunt& sh, double u_steps, double v);

// Per-bus complex imbalance s_it at interval t. Branch and shunt flows are
// recomputed from the solution voltages; device and DC-branch terms are read
// from the solution.
std::vector<Complex> bus_imbalance(const Instance& inst, const Solution& sol, int t);

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 30;
};

enum class PfStatus { Converged, NonConvergence, SingularJacobian };

struct PowerFlowResult {
    PfStatus status = PfStatus::NonConvergence;
    ComplexVoltageState state;
    int iterations = 0;
    double final_mismatch = 0.0;
};

// Newton-Raphson power flow at interval t with device p/q, shunt steps, DC
// flows and branch settings fixed from `fixed`. The slack bus keeps its
// voltage from the start state (flat by default) and absorbs the residual
// real and reactive power; all other buses are driven to |imbalance| < tol.
PowerFlowResult solve_power_flow(const Instance& inst, const Solution& fixed, int t,
                                 int slack_bus, const NewtonOptions& opts = {});
PowerFlowResult solve_power_flow(const Instance& inst, const Solution& fixed, int t,
                                 int slack_bus, const ComplexVoltageState& start,
                                 const NewtonOptions& opts);

// Mismatch vector used by the Newton iteration: bus imbalance with branch and
// shunt flows recomputed from `state` and everything else fixed from `fixed`.
// Exposed for the finite-difference Jacobian check.
std::vector<Complex> pf_mismatch(const Instance& inst, const Solution& fixed, int t,
                                 const ComplexVoltageState& state);

// Dense Jacobian of the stacked [Re(mismatch); Im(mismatch)] at non-slack
// buses with respect to [theta; v] at non-slack buses.
std::vector<double> pf_jacobian(const Instance& inst, const Solution& fixed, int t,
                                const ComplexVoltageState& state, int slack_bus);

}  // namespace go3
