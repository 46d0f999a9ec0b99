#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "go3/evaluator.hpp"
#include "go3/model.hpp"

namespace go3 {

struct ScenarioPreset {
    int size_class = 14;  // bus count: 14 and 73 are the desk classes; the
                          // larger competition classes are accepted but heavy
    int division = 2;     // 1 real-time, 2 day-ahead, 3 week-ahead
    bool extreme_weather = false;

    // 0 means derive from the division and seed.
    int interval_count = 0;

    std::string name() const;
};

// "14-div1", "73-div2", "73-div3-extreme", ...
ScenarioPreset parse_preset(const std::string& name);

// Deterministic in (preset, seed): same pair, same instance, bit for bit.
Instance generate_scenario(const ScenarioPreset& preset, std::uint64_t seed);

struct SolverSpec {
    std::string name;
    // Template with {instance}, {out}, {budget}, {seed} placeholders, run
    // through /bin/sh.
    std::string command;
};

std::vector<SolverSpec> load_solver_manifest(const std::string& path);

struct RankingRow {
    std::string name;
    // Index 0..2 = divisions 1..3, index 3 = all.
    std::array<double, 4> obj{};
    std::array<int, 4> nb{};
};

struct RankingTable {
    std::vector<RankingRow> rows;  // rows[0] is the ensemble

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

struct TournamentRun {
    std::string instance_path;
    std::string instance_name;
    int division = 2;
    std::string solver;
    double score = 0.0;
    bool feasible = false;
    std::string cls;
    double wall_seconds = 0.0;
    bool timed_out = false;
};

struct TournamentResult {
    RankingTable table;
    std::vector<TournamentRun> runs;
};

// Runs every solver on every instance in a separate process group with an
// enforced wall-clock kill, evaluates whatever solution file is present at
// the limit, and assembles the ranking. Per-run evaluation records land in
// out_dir/evals for the report stage; solver output and logs in out_dir/runs.
TournamentResult run_tournament(const std::vector<std::string>& instance_paths,
                                const std::vector<SolverSpec>& solvers,
                                const std::map<int, double>& division_limits,
                                const std::string& out_dir);

// Penalty and gap breakdown rows from the eval records written by
// run_tournament; emits report.csv and report.json under out_dir.
void write_breakdown_report(const std::string& evals_dir, const std::string& out_dir);

// GO3_TMPDIR override, otherwise the system temp directory.
std::string scratch_dir();

// Matched solution triple for the penalty-ordering study: an engineering-
// feasible base, a physically-feasible variant with one line overloaded, and
// an evaluation-feasible variant with one bus imbalance.
struct SolutionTriple {
    Solution engineering, physical, evaluation;
    bool ok = false;  // construction can fail on unlucky instances
};
SolutionTriple make_ordering_triple(const Instance& inst);

}  // namespace go3
