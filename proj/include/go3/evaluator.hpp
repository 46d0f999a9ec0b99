#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "go3/model.hpp"
#include "go3/objective.hpp"
#include "json.hpp"

namespace go3 {

struct HardViolation {
    std::string family;
    std::string entity;
    int t = -1;  // -1 when not interval-indexed
    double magnitude = 0.0;
};

struct FeasibilityReport {
    std::vector<HardViolation> hard_violations;
    std::map<std::string, double> max_violation_per_family;
    bool feasible = false;
};

enum class FeasibilityClass {
    Infeasible,
    EvaluationFeasible,
    PhysicallyFeasible,
    EngineeringFeasible,
};

const char* to_string(FeasibilityClass c);

struct Evaluation {
    FeasibilityReport feasibility;
    std::optional<ObjectiveBreakdown> objective;
    double score = 0.0;
    FeasibilityClass cls = FeasibilityClass::Infeasible;

    nlohmann::json to_json() const;
};

// Every formulation constraint without an explicit penalty term is hard:
// integer domains, indicator consistency, must-run/forced-outage, device and
// branch variable bounds, ramps, reserve headroom, min-up/down, startup and
// shutdown count limits, energy-curve domain membership, DC branch bounds,
// voltage bounds, and connectivity in the base case and every contingency.
// Integer variables are rounded after the integrality check so that linked
// constraints are judged against clean 0/1 values.
FeasibilityReport check_hard_constraints(const Instance& inst, const Solution& sol,
                                         double tol = 1e-6);

// Full evaluation: feasibility gate, objective breakdown, score, class.
Evaluation evaluate(const Instance& inst, const Solution& sol, double tol = 1e-6);

// 0 when infeasible, max(0, z_ms) otherwise.
double score(const Evaluation& ev);

}  // namespace go3
