#include "go3/harness.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "go3/equilibrium.hpp"
#include "go3/json_io.hpp"
#include "go3/solver.hpp"

namespace go3 {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Deterministic uniform helpers on raw engine bits, so generated instances do
// not depend on the standard library's distribution implementations.
struct Rng {
    std::mt19937_64 eng;

    explicit Rng(std::uint64_t seed) : eng(seed) {}

    double unit() { return (eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int pick(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
};

std::string bus_name(int i) { return "bus" + std::to_string(i); }

}  // namespace

std::string ScenarioPreset::name() const {
    std::string s = std::to_string(size_class) + "-div" + std::to_string(division);
    if (extreme_weather) s += "-extreme";
    return s;
}

ScenarioPreset parse_preset(const std::string& name) {
    ScenarioPreset p;
    std::string rest = name;
    auto take = [&rest](char sep) {
        auto pos = rest.find(sep);
        std::string head = pos == std::string::npos ? rest : rest.substr(0, pos);
        rest = pos == std::string::npos ? "" : rest.substr(pos + 1);
        return head;
    };
    try {
        p.size_class = std::stoi(take('-'));
        std::string div = take('-');
        if (div.rfind("div", 0) != 0) throw std::invalid_argument(div);
        p.division = std::stoi(div.substr(3));
    } catch (const std::exception&) {
        throw std::invalid_argument("bad preset '" + name +
                                    "', expected e.g. 73-div2 or 14-div1-extreme");
    }
    if (p.division < 1 || p.division > 3)
        throw std::invalid_argument("preset division must be 1, 2, or 3");
    if (!rest.empty()) {
        if (rest == "extreme")
            p.extreme_weather = true;
        else
            throw std::invalid_argument("bad preset suffix '" + rest + "'");
    }
    return p;
}

Instance generate_scenario(const ScenarioPreset& preset, std::uint64_t seed) {
    const int n = preset.size_class;
    Rng rng(seed * 0x9e3779b97f4a7c15ULL ^ (std::uint64_t)n * 1000003ULL ^
            (std::uint64_t)preset.division * 7919ULL ^ (preset.extreme_weather ? 0x5bd1e995 : 0));

    Instance inst;
    inst.format_version = "1";
    inst.base_mva = 100.0;

    // Horizon by division.
    int nt = preset.interval_count;
    double step = 1.0;
    switch (preset.division) {
        case 1:
            step = 1.0;
            if (nt == 0) nt = 4 + rng.pick(5);  // 4..8 h
            break;
        case 2:
            step = 2.0;
            if (nt == 0) nt = 12 + rng.pick(7);  // 24..36 h
            break;
        default:
            step = 6.0;
            if (nt == 0) nt = 20 + rng.pick(9);  // 5..7 days
            break;
    }
    for (int t = 0; t < nt; ++t) inst.intervals.push_back({t, step});
    std::vector<double> hour(nt);  // midpoint of each interval in hours
    double h = 0.0;
    for (int t = 0; t < nt; ++t) {
        hour[t] = h + 0.5 * step;
        h += step;
    }

    for (int i = 0; i < n; ++i) inst.buses.push_back({bus_name(i), 0.90, 1.10, 0.0});

    // Ring plus chords; the 0-1 ring edge is doubled into a parallel corridor
    // whose limits are sized against the anchor flow below.
    const double load_scale = preset.extreme_weather ? 1.4 : 1.0;
    const double anchor_peak = (n <= 14 ? 0.8 : 2.0 * n / 73.0) * load_scale;
    const double pair_flow = 0.48 * anchor_peak;

    auto add_branch = [&](const std::string& id, int a, int b, double s_max,
                          double s_max_ctg, bool shifter) {
        AcBranch br;
        br.id = id;
        br.from_id = bus_name(a);
        br.to_id = bus_name(b);
        const double x = rng.uniform(0.06, 0.14);
        const double r = x / 12.0;
        br.y_sr = 1.0 / Complex(r, x);
        const double chg = rng.uniform(0.01, 0.03);
        br.y_fr = Complex(0.0, chg / 2.0);
        br.y_to = Complex(0.0, chg / 2.0);
        if (shifter) {
            br.tau_min = 0.98;
            br.tau_max = 1.02;
            br.phi_min = -0.15;
            br.phi_max = 0.15;
        }
        br.s_max = s_max;
        br.s_max_ctg = s_max_ctg;
        br.u0 = 1;
        inst.ac_branches.push_back(br);
    };

    const double bulk_limit = std::max(2.5, 2.5 * anchor_peak);
    add_branch("lnp0", 0, 1, 1.30 * pair_flow, 2.45 * pair_flow, false);
    add_branch("lnp1", 0, 1, 1.30 * pair_flow, 2.45 * pair_flow, false);
    for (int i = 1; i < n; ++i)
        add_branch("ln" + std::to_string(i), i, (i + 1) % n, bulk_limit, 1.3 * bulk_limit,
                   false);

    const int n_chords = std::max(2, n / 3);
    std::set<std::pair<int, int>> used{{0, 1}};
    int added = 0;
    int shifter_slot = rng.pick(n_chords);
    for (int guard = 0; guard < 20 * n_chords && added < n_chords; ++guard) {
        int a = rng.pick(n), b = rng.pick(n);
        if (a == b) continue;
        auto key = std::minmax(a, b);
        if (std::abs(a - b) == 1 || std::abs(a - b) == n - 1) continue;  // ring edges
        if (!used.insert(key).second) continue;
        add_branch("ch" + std::to_string(added), key.first, key.second, bulk_limit,
                   1.3 * bulk_limit, added == shifter_slot);
        ++added;
    }

    // Device roster. Sizes and counts scale with the class.
    const int n_pr = n <= 14 ? 3 : std::max(6, n / 5);
    const int n_cs = n <= 14 ? 3 : std::max(5, n / 6);
    const double pr_lo = n <= 14 ? 0.25 : 0.3, pr_hi = n <= 14 ? 0.55 : 0.8;
    const double cs_lo = n <= 14 ? 0.18 : 0.25, cs_hi = n <= 14 ? 0.35 : 0.5;
    const double d_min = step;

    auto diurnal = [&](double hr) { return 0.78 + 0.22 * std::sin(2.0 * M_PI * (hr - 9.0) / 24.0); };
    auto solar = [&](double hr) {
        const double x = std::fmod(hr, 24.0);
        return x < 6.0 || x > 18.0 ? 0.0 : std::sin(M_PI * (x - 6.0) / 12.0);
    };

    auto place = [&](int k) { return 2 + (k * 7 + rng.pick(n)) % (n - 2); };

    auto producer_curve = [&](double cap_t, double base_price, Rng& r2) {
        PwlCurve c;
        c.blocks.push_back({0.45 * cap_t, base_price});
        c.blocks.push_back({0.30 * cap_t, base_price + r2.uniform(2.0, 5.0)});
        c.blocks.push_back({0.25 * cap_t, base_price + r2.uniform(5.0, 9.0)});
        return c;
    };
    auto consumer_curve = [&](double cap_t, double top, double mid, double low) {
        PwlCurve c;
        c.blocks.push_back({0.5 * cap_t, top});
        c.blocks.push_back({0.3 * cap_t, mid});
        c.blocks.push_back({0.2 * cap_t, low});
        return c;
    };

    auto fill_const = [&](std::vector<double>& v, double x) { v.assign(nt, x); };

    // Anchor producer at bus 0: big, cheap, must-run.
    {
        Device d;
        d.id = "gen_anchor";
        d.kind = DeviceKind::Producing;
        d.bus_id = bus_name(0);
        const double cap = 1.5 * anchor_peak;
        fill_const(d.p_max, cap);
        fill_const(d.p_min, 0.1 * cap);
        fill_const(d.q_min, -0.5 * cap);
        fill_const(d.q_max, 0.5 * cap);
        fill_const(d.reserve_max, 0.35 * cap);
        d.reserve_cost = rng.uniform(1.0, 3.0);
        d.ramp_up = d.ramp_down = cap;
        d.ramp_startup = d.ramp_shutdown = 0.1 * cap / d_min + cap;
        d.startup_cost = rng.uniform(40.0, 90.0);
        d.shutdown_cost = rng.uniform(15.0, 40.0);
        d.on_cost = rng.uniform(1.0, 3.0);
        const double base_price = rng.uniform(5.0, 8.0);
        for (int t = 0; t < nt; ++t) d.cost.push_back(producer_curve(cap, base_price, rng));
        d.u0 = 1;
        d.p0 = 0.4 * cap;
        d.min_uptime = 2.0;
        d.min_downtime = 2.0;
        for (int t = 0; t < nt; ++t) d.must_run.insert(t);
        inst.devices.push_back(std::move(d));
    }

    const char* kinds[] = {"base", "mid", "peak", "renew"};
    for (int k = 0; k < n_pr; ++k) {
        Device d;
        d.id = "gen" + std::to_string(k);
        d.kind = DeviceKind::Producing;
        d.bus_id = bus_name(place(k));
        const std::string type = kinds[k % 4];
        const double cap = rng.uniform(pr_lo, pr_hi);
        double pmin_frac = 0.0, price = 0.0;
        if (type == "base") {
            pmin_frac = 0.25;
            price = rng.uniform(7.0, 11.0);
            d.min_uptime = std::min(4.0, nt * step / 3.0);
            d.min_downtime = std::min(3.0, nt * step / 3.0);
            d.u0 = 1;
        } else if (type == "mid") {
            pmin_frac = 0.15;
            price = rng.uniform(13.0, 19.0);
            d.min_uptime = 2.0;
            d.min_downtime = 2.0;
            d.u0 = rng.pick(2);
        } else if (type == "peak") {
            pmin_frac = 0.10;
            price = rng.uniform(24.0, 34.0);
            d.min_uptime = std::min(1.0, step);
            d.min_downtime = 0.0;
            d.u0 = 0;
            d.max_startups.push_back({{}, 2});
            d.max_shutdowns.push_back({{}, 2});
            for (int t = 0; t < nt; ++t) {
                d.max_startups.back().intervals.push_back(t);
                d.max_shutdowns.back().intervals.push_back(t);
            }
        } else {  // renewable
            pmin_frac = 0.0;
            price = rng.uniform(0.5, 2.0);
            d.min_uptime = 0.0;
            d.min_downtime = 0.0;
            d.u0 = 1;
        }
        const double renew_scale = preset.extreme_weather ? 0.5 : 1.0;
        const bool is_solar = k % 2 == 0;
        const double phase = rng.uniform(0.0, 24.0);
        for (int t = 0; t < nt; ++t) {
            double cap_t = cap;
            if (type == "renew") {
                const double shape = is_solar
                                         ? solar(hour[t])
                                         : 0.45 + 0.35 * std::sin(2.0 * M_PI *
                                                                  (hour[t] + phase) / 30.0);
                cap_t = renew_scale * cap * std::max(0.0, shape);
            }
            d.p_max.push_back(cap_t);
            d.p_min.push_back(pmin_frac * cap);
            d.q_min.push_back(-0.45 * cap);
            d.q_max.push_back(0.45 * cap);
            d.reserve_max.push_back(0.35 * cap_t);
            d.cost.push_back(type == "renew" ? PwlCurve{{{cap_t, price}}}
                                             : producer_curve(cap_t, price, rng));
        }
        // Pathological p_min > p_max can appear for renewables at zero output.
        for (int t = 0; t < nt; ++t) d.p_min[t] = std::min(d.p_min[t], d.p_max[t]);
        d.reserve_cost = rng.uniform(1.0, 5.0);
        d.ramp_up = d.ramp_down = type == "renew" ? cap * (1.0 + 1.0 / d_min) : cap;
        d.ramp_startup = d.ramp_shutdown = pmin_frac * cap / d_min + cap;
        d.startup_cost = rng.uniform(20.0, 80.0);
        d.shutdown_cost = rng.uniform(8.0, 30.0);
        d.on_cost = rng.uniform(0.5, 4.0);
        d.p0 = d.u0 ? std::max(d.p_min[0], 0.3 * d.p_max[0]) : 0.0;
        if (type == "mid" && k < 4) {
            EnergyConstraint ec;
            double budget = 0.0;
            for (int t = 0; t < nt; ++t) {
                ec.coeffs[t] = step;
                budget += step * d.p_max[t];
            }
            ec.a0 = -0.65 * budget;
            d.energy_constraints.push_back(ec);
        }
        inst.devices.push_back(std::move(d));
    }
    // One fully forced-out unit.
    {
        Device d;
        d.id = "gen_out";
        d.kind = DeviceKind::Producing;
        d.bus_id = bus_name(place(n_pr));
        const double cap = rng.uniform(pr_lo, pr_hi);
        fill_const(d.p_max, cap);
        fill_const(d.p_min, 0.1 * cap);
        fill_const(d.q_min, -0.4 * cap);
        fill_const(d.q_max, 0.4 * cap);
        fill_const(d.reserve_max, 0.3 * cap);
        d.reserve_cost = rng.uniform(1.0, 5.0);
        d.ramp_up = d.ramp_down = cap;
        d.ramp_startup = d.ramp_shutdown = 0.1 * cap / d_min + cap;
        d.startup_cost = 50.0;
        d.shutdown_cost = 20.0;
        d.on_cost = 2.0;
        const double price = rng.uniform(15.0, 25.0);
        for (int t = 0; t < nt; ++t) {
            d.cost.push_back(producer_curve(cap, price, rng));
            d.forced_outage.insert(t);
        }
        d.u0 = 0;
        d.p0 = 0.0;
        inst.devices.push_back(std::move(d));
    }

    // Anchor consumer at bus 1 drives the corridor flow.
    {
        Device d;
        d.id = "load_anchor";
        d.kind = DeviceKind::Consuming;
        d.bus_id = bus_name(1);
        for (int t = 0; t < nt; ++t) {
            const double cap_t = anchor_peak * diurnal(hour[t]);
            d.p_max.push_back(cap_t);
            d.p_min.push_back(0.0);
            d.q_min.push_back(-0.1 * anchor_peak);
            d.q_max.push_back(0.35 * anchor_peak);
            d.reserve_max.push_back(0.2 * cap_t);
            d.cost.push_back(consumer_curve(cap_t, rng.uniform(85.0, 95.0),
                                            rng.uniform(55.0, 65.0), rng.uniform(30.0, 40.0)));
        }
        d.reserve_cost = rng.uniform(2.0, 6.0);
        d.ramp_up = d.ramp_down = anchor_peak * (1.0 + 2.0 / d_min);
        d.ramp_startup = d.ramp_shutdown = anchor_peak * (1.0 + 2.0 / d_min);
        d.u0 = 1;
        d.p0 = 0.0;
        inst.devices.push_back(std::move(d));
    }
    for (int k = 0; k < n_cs; ++k) {
        Device d;
        d.id = "load" + std::to_string(k);
        d.kind = DeviceKind::Consuming;
        d.bus_id = bus_name(place(n_pr + 1 + k));
        const double peak = rng.uniform(cs_lo, cs_hi) * load_scale;
        const double top = rng.uniform(60.0, 90.0);
        for (int t = 0; t < nt; ++t) {
            const double cap_t = peak * diurnal(hour[t] + rng.uniform(-0.5, 0.5));
            d.p_max.push_back(cap_t);
            d.p_min.push_back(0.0);
            d.q_min.push_back(-0.1 * peak);
            d.q_max.push_back(0.35 * peak);
            d.reserve_max.push_back(0.2 * cap_t);
            d.cost.push_back(consumer_curve(cap_t, top, top - rng.uniform(20.0, 30.0),
                                            top - rng.uniform(35.0, 45.0)));
        }
        d.reserve_cost = rng.uniform(2.0, 6.0);
        d.ramp_up = d.ramp_down = peak * (1.0 + 2.0 / d_min);
        d.ramp_startup = d.ramp_shutdown = peak * (1.0 + 2.0 / d_min);
        d.u0 = 1;
        d.p0 = 0.0;
        inst.devices.push_back(std::move(d));
    }

    // Shunts, DC branches, zones, contingencies.
    const int n_sh = n <= 14 ? 2 : 4;
    for (int k = 0; k < n_sh; ++k) {
        Shunt sh;
        sh.id = "sh" + std::to_string(k);
        sh.bus_id = bus_name(place(2 * k + 3));
        sh.y_step = k % 2 == 0 ? Complex(0.002, 0.05) : Complex(0.001, -0.04);
        sh.u_min = 0;
        sh.u_max = 3;
        inst.shunts.push_back(sh);
    }
    const int n_dc = n <= 14 ? 1 : 2;
    for (int k = 0; k < n_dc; ++k) {
        DcBranch dc;
        dc.id = "dc" + std::to_string(k);
        const int a = (n / 4 + k) % n;
        int b = (3 * n / 4 + 2 * k) % n;
        if (b == a) b = (b + 1) % n;
        dc.from_id = bus_name(a);
        dc.to_id = bus_name(b);
        dc.p_max = 0.3 * anchor_peak;
        dc.q_min_fr = -0.15;
        dc.q_max_fr = 0.15;
        dc.q_min_to = -0.15;
        dc.q_max_to = 0.15;
        inst.dc_branches.push_back(dc);
    }

    const int nz = n <= 14 ? 1 : 3;
    for (int z = 0; z < nz; ++z) {
        ReserveZone zone;
        zone.id = "zone" + std::to_string(z);
        zone.sigma = rng.uniform(0.05, 0.12);
        zone.shortage_penalty = rng.uniform(2000.0, 6000.0);
        inst.zones.push_back(zone);
    }
    for (int j = 0; j < static_cast<int>(inst.devices.size()); ++j)
        inst.zones[j % nz].member_ids.push_back(inst.devices[j].id);

    int ctg_id = 0;
    auto add_ctg = [&](const std::string& branch) {
        Contingency c;
        c.id = "ctg" + std::to_string(ctg_id++);
        c.branch_id = branch;
        inst.contingencies.push_back(c);
    };
    add_ctg("lnp0");
    add_ctg("lnp1");
    for (int k = 0; k < added; ++k) add_ctg("ch" + std::to_string(k));
    add_ctg("dc0");
    add_ctg("ln" + std::to_string(1 + rng.pick(n - 1)));

    inst.penalties.c_p = rng.uniform(2e5, 4e5);
    inst.penalties.c_q = rng.uniform(1e5, 2e5);
    inst.penalties.c_s = rng.uniform(1500.0, 3000.0);
    inst.penalties.c_sw = rng.uniform(60.0, 140.0);
    inst.penalties.c_en = rng.uniform(800.0, 1500.0);

    inst.meta = json{{"preset", preset.name()},
                     {"division", preset.division},
                     {"size_class", preset.size_class},
                     {"extreme", preset.extreme_weather},
                     {"seed", seed}};
    inst.finalize();
    return inst;
}

// ---------------------------------------------------------------------------
// Tournament
// ---------------------------------------------------------------------------

std::string scratch_dir() {
    if (const char* env = std::getenv("GO3_TMPDIR")) return env;
    return fs::temp_directory_path().string();
}

std::vector<SolverSpec> load_solver_manifest(const std::string& path) {
    json j = json::parse(read_file(path));
    std::vector<SolverSpec> out;
    for (const auto& row : j)
        out.push_back({row.at("name").get<std::string>(), row.at("command").get<std::string>()});
    return out;
}

namespace {

std::string substitute(std::string tpl, const std::string& key, const std::string& value) {
    std::string out;
    size_t pos = 0;
    while (true) {
        size_t hit = tpl.find(key, pos);
        if (hit == std::string::npos) {
            out += tpl.substr(pos);
            return out;
        }
        out += tpl.substr(pos, hit - pos);
        out += value;
        pos = hit + key.size();
    }
}

struct RunOutcome {
    bool timed_out = false;
    double wall_seconds = 0.0;
};

RunOutcome run_with_limit(const std::string& command, double limit_seconds,
                          const std::string& log_path, const std::string& workdir) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;

    pid_t pid = fork();
    if (pid == 0) {
        setpgid(0, 0);
        if (!workdir.empty()) {
            if (chdir(workdir.c_str()) != 0) _exit(126);
        }
        int fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, 1);
            dup2(fd, 2);
            close(fd);
        }
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    if (pid < 0) return out;
    setpgid(pid, pid);

    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(limit_seconds));
    int status = 0;
    while (true) {
        pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            out.timed_out = true;
            waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(15));
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

TournamentResult run_tournament(const std::vector<std::string>& instance_paths,
                                const std::vector<SolverSpec>& solvers,
                                const std::map<int, double>& division_limits,
                                const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "runs");
    fs::create_directories(fs::path(out_dir) / "evals");

    TournamentResult result;
    std::vector<std::string> paths = instance_paths;
    std::sort(paths.begin(), paths.end());

    struct Cell {
        double score = 0.0;
        bool feasible = false;
    };
    std::vector<std::vector<Cell>> grid(paths.size(), std::vector<Cell>(solvers.size()));
    std::vector<int> division_of(paths.size(), 2);

    for (size_t pi = 0; pi < paths.size(); ++pi) {
        Instance inst = load_instance(paths[pi]);
        const std::string name = fs::path(paths[pi]).stem().string();
        int division = 2;
        if (inst.meta.is_object() && inst.meta.contains("division"))
            division = inst.meta.at("division").get<int>();
        division_of[pi] = division;
        double limit = 60.0;
        if (auto it = division_limits.find(division); it != division_limits.end())
            limit = it->second;
        else if (!division_limits.empty())
            limit = division_limits.begin()->second;

        for (size_t si = 0; si < solvers.size(); ++si) {
            const std::string tag = name + "__" + solvers[si].name;
            const std::string out_file =
                (fs::path(out_dir) / "runs" / (tag + ".solution.json")).string();
            const std::string log_file =
                (fs::path(out_dir) / "runs" / (tag + ".log")).string();
            std::string cmd = solvers[si].command;
            cmd = substitute(cmd, "{instance}", paths[pi]);
            cmd = substitute(cmd, "{out}", out_file);
            cmd = substitute(cmd, "{budget}", std::to_string(limit));
            cmd = substitute(cmd, "{seed}", std::to_string(pi * 1000 + si));
            RunOutcome rr = run_with_limit(cmd, limit, log_file, scratch_dir());

            TournamentRun run;
            run.instance_path = paths[pi];
            run.instance_name = name;
            run.division = division;
            run.solver = solvers[si].name;
            run.wall_seconds = rr.wall_seconds;
            run.timed_out = rr.timed_out;

            json record{{"instance", paths[pi]},
                        {"instance_name", name},
                        {"division", division},
                        {"solver", solvers[si].name},
                        {"timed_out", rr.timed_out},
                        {"wall_seconds", rr.wall_seconds}};
            try {
                Solution sol = load_solution(inst, out_file);
                Evaluation ev = evaluate(inst, sol);
                run.score = ev.score;
                run.feasible = ev.feasibility.feasible;
                run.cls = to_string(ev.cls);
                record["evaluation"] = ev.to_json();
                if (ev.feasibility.feasible && ev.objective)
                    record["gap"] = bound_report(inst, ev).to_json();
            } catch (const std::exception& e) {
                run.score = 0.0;
                run.feasible = false;
                run.cls = "infeasible";
                record["error"] = e.what();
            }
            record["score"] = run.score;
            record["feasible"] = run.feasible;
            record["class"] = run.cls;
            write_file_atomic(
                (fs::path(out_dir) / "evals" / (tag + ".json")).string(),
                record.dump(2) + "\n");

            grid[pi][si] = {run.score, run.feasible};
            result.runs.push_back(std::move(run));
        }
    }

    // Ranking: ensemble row first, then solvers in manifest order.
    RankingRow ensemble;
    ensemble.name = "ensemble";
    std::vector<RankingRow> rows(solvers.size());
    for (size_t si = 0; si < solvers.size(); ++si) rows[si].name = solvers[si].name;

    for (size_t pi = 0; pi < paths.size(); ++pi) {
        const int dd = division_of[pi] - 1;
        double best_feasible = -1.0;
        bool any_feasible = false;
        double best_any = 0.0;
        for (size_t si = 0; si < solvers.size(); ++si) {
            rows[si].obj[dd] += grid[pi][si].score;
            rows[si].obj[3] += grid[pi][si].score;
            best_any = std::max(best_any, grid[pi][si].score);
            if (grid[pi][si].feasible) {
                any_feasible = true;
                best_feasible = std::max(best_feasible, grid[pi][si].score);
            }
        }
        ensemble.obj[dd] += best_any;
        ensemble.obj[3] += best_any;
        if (any_feasible) {
            ensemble.nb[dd] += 1;
            ensemble.nb[3] += 1;
            for (size_t si = 0; si < solvers.size(); ++si)
                if (grid[pi][si].feasible &&
                    grid[pi][si].score >= best_feasible - 1e-12) {
                    rows[si].nb[dd] += 1;
                    rows[si].nb[3] += 1;
                }
        }
    }
    result.table.rows.push_back(ensemble);
    for (auto& r : rows) result.table.rows.push_back(std::move(r));
    return result;
}

json RankingTable::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back(json{{"name", r.name},
                              {"obj_div1", r.obj[0]},
                              {"nb_div1", r.nb[0]},
                              {"obj_div2", r.obj[1]},
                              {"nb_div2", r.nb[1]},
                              {"obj_div3", r.obj[2]},
                              {"nb_div3", r.nb[2]},
                              {"obj_all", r.obj[3]},
                              {"nb_all", r.nb[3]}});
    return json{{"rows", rows_j}};
}

std::string RankingTable::to_csv() const {
    std::ostringstream os;
    os << "team,obj_div1,nb_div1,obj_div2,nb_div2,obj_div3,nb_div3,obj_all,nb_all\n";
    for (const auto& r : rows) {
        os << r.name;
        for (int d = 0; d < 4; ++d) os << "," << r.obj[d] << "," << r.nb[d];
        os << "\n";
    }
    return os.str();
}

void write_breakdown_report(const std::string& evals_dir, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(evals_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    json rows = json::array();
    std::ostringstream csv;
    csv << "instance,division,solver,score,feasible,class,z_ms,undefined_pct,"
           "pct_p,pct_q,pct_s,pct_ctg_worst,pct_ctg_avg,pct_rsv_zone,pct_en,"
           "pct_consumer_value,pct_producer_cost,gap_abs,gap_rel_surplus,gap_rel_cost\n";

    for (const auto& f : files) {
        json rec = json::parse(read_file(f));
        json row{{"instance", rec.value("instance_name", "")},
                 {"division", rec.value("division", 0)},
                 {"solver", rec.value("solver", "")},
                 {"score", rec.value("score", 0.0)},
                 {"feasible", rec.value("feasible", false)},
                 {"class", rec.value("class", "")}};
        csv << row["instance"].get<std::string>() << "," << row["division"].get<int>()
            << "," << row["solver"].get<std::string>() << "," << row["score"].get<double>()
            << "," << (row["feasible"].get<bool>() ? 1 : 0) << ","
            << row["class"].get<std::string>() << ",";

        const bool has_obj =
            rec.contains("evaluation") && rec["evaluation"].contains("objective");
        if (has_obj) {
            const json& obj = rec["evaluation"]["objective"];
            const double z = obj.value("z_ms", 0.0);
            row["z_ms"] = z;
            csv << z << ",";
            const bool undef = z == 0.0;
            row["undefined_pct"] = undef;
            csv << (undef ? 1 : 0) << ",";
            auto pct = [&](const char* key) -> json {
                if (undef) return nullptr;
                return 100.0 * obj.value(key, 0.0) / std::abs(z);
            };
            const char* keys[] = {"z_p", "z_q", "z_s", "z_ctg_worst", "z_ctg_avg",
                                  "z_rsv_zone", "z_en"};
            const char* names[] = {"pct_p", "pct_q", "pct_s", "pct_ctg_worst",
                                   "pct_ctg_avg", "pct_rsv_zone", "pct_en"};
            for (int i = 0; i < 7; ++i) {
                json v = pct(keys[i]);
                row[names[i]] = v;
                if (!v.is_null()) csv << v.get<double>();
                csv << ",";
            }
            json cons = undef ? json() : json(100.0 * obj.value("energy_value", 0.0) / z);
            json prod = undef ? json() : json(100.0 * obj.value("energy_cost", 0.0) / z);
            row["pct_consumer_value"] = cons;
            row["pct_producer_cost"] = prod;
            if (!cons.is_null()) csv << cons.get<double>();
            csv << ",";
            if (!prod.is_null()) csv << prod.get<double>();
            csv << ",";
        } else {
            row["z_ms"] = nullptr;
            row["undefined_pct"] = true;
            csv << ",1,,,,,,,,,,";
        }
        if (rec.contains("gap") && rec["gap"].is_object()) {
            const json& g = rec["gap"];
            row["gap_abs"] = g.value("gap_abs", 0.0);
            row["gap_rel_surplus"] = g.value("gap_rel_surplus", 0.0);
            row["gap_rel_cost"] = g.contains("gap_rel_cost") ? g["gap_rel_cost"] : json();
            csv << g.value("gap_abs", 0.0) << "," << g.value("gap_rel_surplus", 0.0) << ",";
            if (!row["gap_rel_cost"].is_null()) csv << row["gap_rel_cost"].get<double>();
        } else {
            row["gap_abs"] = nullptr;
            row["gap_rel_surplus"] = nullptr;
            row["gap_rel_cost"] = nullptr;
            csv << ",,";
        }
        csv << "\n";
        rows.push_back(row);
    }
    write_file_atomic((fs::path(out_dir) / "report.json").string(),
                      json{{"rows", rows}}.dump(2) + "\n");
    write_file_atomic((fs::path(out_dir) / "report.csv").string(), csv.str());
}

SolutionTriple make_ordering_triple(const Instance& inst) {
    SolutionTriple triple;
    SolverConfig cfg;
    cfg.iteration_capped = true;
    cfg.polish_eval_cap = 0;  // the base pipeline solution is enough here
    SolveResult base = solve(inst, cfg);
    if (!base.eval.feasibility.feasible) return triple;
    triple.engineering = base.best;

    // Physically feasible with one overload: open one corridor branch and
    // rebuild, doubling the survivor's loading.
    auto it = inst.ac_index.find("lnp1");
    if (it == inst.ac_index.end()) return triple;
    const int branch = it->second;
    CandidateSchedule sched;
    sched.nt = inst.num_t();
    sched.dev_u.resize(inst.devices.size() * sched.nt);
    sched.ac_u.resize(inst.ac_branches.size() * sched.nt);
    for (size_t c = 0; c < sched.dev_u.size(); ++c)
        sched.dev_u[c] = std::round(base.best.dev_u[c]);
    for (size_t c = 0; c < sched.ac_u.size(); ++c)
        sched.ac_u[c] = std::round(base.best.ac_u[c]);
    for (int t = 0; t < sched.nt; ++t) sched.ac_u[sched.idx(branch, t)] = 0.0;
    {
        std::vector<int> status(inst.ac_branches.size(), 1);
        status[branch] = 0;
        if (build_topology(inst, status).count > 1) return triple;
        for (const auto& ctg : inst.contingencies)
            if (ctg.branch >= 0 &&
                build_topology(inst, status, std::make_pair(ctg.kind, ctg.branch)).count > 1)
                return triple;
    }
    triple.physical = build_solution(inst, sched);

    // Evaluation feasible with one imbalance: bump one committed producer
    // without re-solving the power flow.
    triple.evaluation = base.best;
    Solution& ev_sol = triple.evaluation;
    const int t_last = inst.num_t() - 1;
    bool bumped = false;
    for (int j = 0; j < static_cast<int>(inst.devices.size()) && !bumped; ++j) {
        const auto& d = inst.devices[j];
        if (!d.is_producer()) continue;
        const int c = ev_sol.idx(j, t_last);
        if (ev_sol.dev_u[c] < 0.5) continue;
        const double p = ev_sol.dev_p[c];
        const double rsv = ev_sol.dev_p_rsv[c];
        const double prev = t_last > 0 ? ev_sol.dev_p[ev_sol.idx(j, t_last - 1)] : d.p0;
        const double d_t = inst.intervals[t_last].duration;
        const double ramp_hi =
            prev + d_t * (ev_sol.dev_u_su[c] > 0.5 ? d.ramp_startup : d.ramp_up);
        const double room = std::min(d.p_max[t_last] - rsv - p, ramp_hi - p);
        const double bump = std::min(0.08, room);
        if (bump > 0.01) {
            ev_sol.dev_p[c] = p + bump;
            bumped = true;
        }
    }
    if (!bumped) return triple;

    triple.ok = true;
    return triple;
}

}  // namespace go3
