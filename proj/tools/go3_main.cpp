#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "go3/equilibrium.hpp"
#include "go3/evaluator.hpp"
#include "go3/harness.hpp"
#include "go3/json_io.hpp"
#include "go3/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"GO Challenge 3 desk-scale toolkit"};
    app.require_subcommand(1);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a solution file");
    std::string ev_instance, ev_solution, ev_json_out;
    double ev_tol = 1e-6;
    eval_cmd->add_option("--instance", ev_instance, "Instance JSON")->required();
    eval_cmd->add_option("--solution", ev_solution, "Solution JSON")->required();
    eval_cmd->add_option("--tol", ev_tol, "Hard-constraint tolerance");
    eval_cmd->add_option("--json-out", ev_json_out, "Write full Evaluation JSON here");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Run the baseline solver");
    std::string so_instance, so_out;
    double so_budget = 60.0;
    std::uint64_t so_seed = 0;
    bool so_no_batch = false, so_switch = false, so_no_lodf = false;
    solve_cmd->add_option("--instance", so_instance, "Instance JSON")->required();
    solve_cmd->add_option("--out", so_out, "Best-so-far solution file")->required();
    solve_cmd->add_option("--budget", so_budget, "Wall clock budget, seconds");
    solve_cmd->add_option("--seed", so_seed, "Random seed");
    solve_cmd->add_flag("--no-batch-rounding", so_no_batch, "Disable iterative batch rounding");
    solve_cmd->add_flag("--switch-search", so_switch, "Enable branch open/close moves");
    solve_cmd->add_flag("--no-lodf-screen", so_no_lodf, "Disable LODF candidate screening");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate a scenario instance");
    std::string g_preset = "14-div2", g_out;
    std::uint64_t g_seed = 0;
    gen_cmd->add_option("--preset", g_preset, "e.g. 14-div1, 73-div2, 73-div3-extreme");
    gen_cmd->add_option("--seed", g_seed, "Scenario seed");
    gen_cmd->add_option("--out", g_out, "Output instance path")->required();

    // bound
    auto* bound_cmd = app.add_subcommand("bound", "Market-equilibrium bound and gaps");
    std::string b_instance, b_solution, b_curves;
    bound_cmd->add_option("--instance", b_instance, "Instance JSON")->required();
    bound_cmd->add_option("--solution", b_solution, "Optional solution for gap reporting");
    bound_cmd->add_option("--curves-out", b_curves, "Dump supply/demand curves JSON");

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Run a tournament and rank solvers");
    std::string r_instances, r_manifest, r_limits, r_out;
    rank_cmd->add_option("--instances", r_instances, "Directory of instance JSON files")
        ->required();
    rank_cmd->add_option("--solvers", r_manifest, "Solver manifest JSON")->required();
    rank_cmd->add_option("--limits", r_limits, "Per-division time limit JSON")->required();
    rank_cmd->add_option("--out", r_out, "Output directory")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "Penalty/gap breakdown report");
    std::string p_evals, p_out;
    report_cmd->add_option("--evals", p_evals, "Directory of eval records")->required();
    report_cmd->add_option("--out", p_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval_cmd) {
            go3::Instance inst = go3::load_instance(ev_instance);
            go3::Evaluation ev;
            try {
                go3::Solution sol = go3::load_solution(inst, ev_solution);
                ev = go3::evaluate(inst, sol, ev_tol);
            } catch (const go3::MalformedSolution& e) {
                std::cerr << "malformed solution: " << e.what() << "\n";
                ev = go3::Evaluation{};
            }
            if (!ev_json_out.empty())
                go3::write_file_atomic(ev_json_out, ev.to_json().dump(2) + "\n");
            std::cout << ev.score << "\n";
            return 0;
        }
        if (*solve_cmd) {
            go3::Instance inst = go3::load_instance(so_instance);
            go3::SolverConfig cfg;
            cfg.wall_clock_budget = so_budget;
            cfg.seed = so_seed;
            cfg.enable_batch_rounding = !so_no_batch;
            cfg.enable_switch_search = so_switch;
            cfg.enable_lodf_screen = !so_no_lodf;
            go3::SolveResult res = go3::solve(inst, cfg, so_out);
            std::cout << res.eval.score << "\n";
            return 0;
        }
        if (*gen_cmd) {
            go3::ScenarioPreset preset = go3::parse_preset(g_preset);
            go3::Instance inst = go3::generate_scenario(preset, g_seed);
            go3::save_instance(inst, g_out);
            std::cout << "wrote " << g_out << "\n";
            return 0;
        }
        if (*bound_cmd) {
            go3::Instance inst = go3::load_instance(b_instance);
            go3::GapReport rep;
            if (!b_solution.empty()) {
                go3::Solution sol = go3::load_solution(inst, b_solution);
                go3::Evaluation ev = go3::evaluate(inst, sol);
                if (!ev.feasibility.feasible) {
                    std::cerr << "solution is hard-infeasible; reporting bound only\n";
                    rep = go3::equilibrium_report(inst);
                } else {
                    rep = go3::bound_report(inst, ev);
                }
            } else {
                rep = go3::equilibrium_report(inst);
            }
            if (!b_curves.empty()) {
                json curves = json::array();
                for (int t = 0; t < inst.num_t(); ++t) {
                    auto [supply, demand] = go3::aggregate_curves(inst, t);
                    json js = json::array(), jd = json::array();
                    double q = 0.0;
                    for (const auto& blk : supply.blocks) {
                        js.push_back({q, blk.price});
                        q += blk.width;
                        js.push_back({q, blk.price});
                    }
                    q = 0.0;
                    for (const auto& blk : demand.blocks) {
                        jd.push_back({q, blk.price});
                        q += blk.width;
                        jd.push_back({q, blk.price});
                    }
                    curves.push_back(json{{"t", t}, {"supply", js}, {"demand", jd}});
                }
                go3::write_file_atomic(b_curves, curves.dump(2) + "\n");
            }
            std::cout << rep.to_json().dump(2) << "\n";
            return 0;
        }
        if (*rank_cmd) {
            std::vector<std::string> instances;
            for (const auto& entry : fs::directory_iterator(r_instances))
                if (entry.path().extension() == ".json")
                    instances.push_back(entry.path().string());
            auto solvers = go3::load_solver_manifest(r_manifest);
            json jl = json::parse(go3::read_file(r_limits));
            std::map<int, double> limits;
            for (auto it = jl.begin(); it != jl.end(); ++it)
                limits[std::stoi(it.key())] = it.value().get<double>();
            go3::TournamentResult res =
                go3::run_tournament(instances, solvers, limits, r_out);
            go3::write_file_atomic((fs::path(r_out) / "ranking.json").string(),
                                   res.table.to_json().dump(2) + "\n");
            go3::write_file_atomic((fs::path(r_out) / "ranking.csv").string(),
                                   res.table.to_csv());
            std::cout << res.table.to_csv();
            return 0;
        }
        if (*report_cmd) {
            go3::write_breakdown_report(p_evals, p_out);
            std::cout << "wrote " << (fs::path(p_out) / "report.csv").string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
