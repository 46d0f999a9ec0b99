#include "go3/json_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace go3 {

using nlohmann::json;

namespace {

json complex_to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ParseError("complex value must be a [re, im] pair");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

json curve_to_json(const PwlCurve& c) {
    json blocks = json::array();
    for (const auto& b : c.blocks) blocks.push_back(json::array({b.width, b.price}));
    return json{{"blocks", blocks}};
}

PwlCurve curve_from_json(const json& j) {
    PwlCurve c;
    for (const auto& b : j.at("blocks")) {
        if (!b.is_array() || b.size() != 2)
            throw ParseError("curve block must be a [width, price] pair");
        c.blocks.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    return c;
}

template <typename T>
json int_set_to_json(const std::set<T>& s) {
    json a = json::array();
    for (const auto& v : s) a.push_back(v);
    return a;
}

std::vector<double> dvec(const json& j, const char* field) {
    if (!j.is_array()) throw ParseError(std::string(field) + " must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

}  // namespace

json instance_to_json(const Instance& inst) {
    json j;
    j["format_version"] = inst.format_version;
    j["base_mva"] = inst.base_mva;
    if (!inst.meta.is_null()) j["meta"] = inst.meta;

    json intervals = json::array();
    for (const auto& t : inst.intervals)
        intervals.push_back(json{{"id", t.id}, {"duration", t.duration}});
    j["intervals"] = intervals;

    json buses = json::array();
    for (const auto& b : inst.buses)
        buses.push_back(json{{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}});
    j["buses"] = buses;

    json devices = json::array();
    for (const auto& d : inst.devices) {
        json jd;
        jd["id"] = d.id;
        jd["kind"] = d.is_producer() ? "producing" : "consuming";
        jd["bus"] = d.bus_id;
        jd["u0"] = d.u0;
        jd["p0"] = d.p0;
        jd["p_min"] = d.p_min;
        jd["p_max"] = d.p_max;
        jd["q_min"] = d.q_min;
        jd["q_max"] = d.q_max;
        jd["ramp_up"] = d.ramp_up;
        jd["ramp_down"] = d.ramp_down;
        jd["ramp_startup"] = d.ramp_startup;
        jd["ramp_shutdown"] = d.ramp_shutdown;
        jd["reserve_max"] = d.reserve_max;
        jd["reserve_cost"] = d.reserve_cost;
        jd["startup_cost"] = d.startup_cost;
        jd["shutdown_cost"] = d.shutdown_cost;
        jd["on_cost"] = d.on_cost;
        json curves = json::array();
        for (const auto& c : d.cost) curves.push_back(curve_to_json(c));
        jd["cost"] = curves;
        jd["must_run"] = int_set_to_json(d.must_run);
        jd["forced_outage"] = int_set_to_json(d.forced_outage);
        jd["min_uptime"] = d.min_uptime;
        jd["min_downtime"] = d.min_downtime;
        json msu = json::array();
        for (const auto& cw : d.max_startups)
            msu.push_back(json{{"intervals", cw.intervals}, {"limit", cw.limit}});
        jd["max_startups"] = msu;
        json msd = json::array();
        for (const auto& cw : d.max_shutdowns)
            msd.push_back(json{{"intervals", cw.intervals}, {"limit", cw.limit}});
        jd["max_shutdowns"] = msd;
        json ecs = json::array();
        for (const auto& ec : d.energy_constraints) {
            json coeffs = json::object();
            for (const auto& [t, a] : ec.coeffs) coeffs[std::to_string(t)] = a;
            ecs.push_back(json{{"a0", ec.a0}, {"coeffs", coeffs}});
        }
        jd["energy_constraints"] = ecs;
        devices.push_back(jd);
    }
    j["devices"] = devices;

    json shunts = json::array();
    for (const auto& s : inst.shunts)
        shunts.push_back(json{{"id", s.id},
                              {"bus", s.bus_id},
                              {"y_step", complex_to_json(s.y_step)},
                              {"u_min", s.u_min},
                              {"u_max", s.u_max}});
    j["shunts"] = shunts;

    json acs = json::array();
    for (const auto& b : inst.ac_branches)
        acs.push_back(json{{"id", b.id},
                           {"from_bus", b.from_id},
                           {"to_bus", b.to_id},
                           {"y_sr", complex_to_json(b.y_sr)},
                           {"y_fr", complex_to_json(b.y_fr)},
                           {"y_to", complex_to_json(b.y_to)},
                           {"tau_min", b.tau_min},
                           {"tau_max", b.tau_max},
                           {"phi_min", b.phi_min},
                           {"phi_max", b.phi_max},
                           {"s_max", b.s_max},
                           {"s_max_ctg", b.s_max_ctg},
                           {"u0", b.u0}});
    j["ac_branches"] = acs;

    json dcs = json::array();
    for (const auto& b : inst.dc_branches)
        dcs.push_back(json{{"id", b.id},
                           {"from_bus", b.from_id},
                           {"to_bus", b.to_id},
                           {"p_max", b.p_max},
                           {"q_min_fr", b.q_min_fr},
                           {"q_max_fr", b.q_max_fr},
                           {"q_min_to", b.q_min_to},
                           {"q_max_to", b.q_max_to}});
    j["dc_branches"] = dcs;

    json zones = json::array();
    for (const auto& z : inst.zones)
        zones.push_back(json{{"id", z.id},
                             {"sigma", z.sigma},
                             {"shortage_penalty", z.shortage_penalty},
                             {"members", z.member_ids}});
    j["zones"] = zones;

    json ctgs = json::array();
    for (const auto& c : inst.contingencies)
        ctgs.push_back(json{{"id", c.id}, {"branch", c.branch_id}});
    j["contingencies"] = ctgs;

    j["penalties"] = json{{"c_p", inst.penalties.c_p},
                          {"c_q", inst.penalties.c_q},
                          {"c_s", inst.penalties.c_s},
                          {"c_sw", inst.penalties.c_sw},
                          {"c_en", inst.penalties.c_en}};
    return j;
}

Instance instance_from_json(const json& j) {
    Instance inst;
    try {
        inst.format_version = j.at("format_version").get<std::string>();
        inst.base_mva = j.value("base_mva", 100.0);
        if (j.contains("meta")) inst.meta = j.at("meta");

        for (const auto& ji : j.at("intervals")) {
            Interval t;
            t.id = ji.at("id").get<int>();
            t.duration = ji.at("duration").get<double>();
            inst.intervals.push_back(t);
        }
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.id = jb.at("id").get<std::string>();
            b.v_min = jb.at("v_min").get<double>();
            b.v_max = jb.at("v_max").get<double>();
            inst.buses.push_back(b);
        }
        for (const auto& jd : j.at("devices")) {
            Device d;
            d.id = jd.at("id").get<std::string>();
            const std::string kind = jd.at("kind").get<std::string>();
            if (kind == "producing")
                d.kind = DeviceKind::Producing;
            else if (kind == "consuming")
                d.kind = DeviceKind::Consuming;
            else
                throw ParseError("device kind must be 'producing' or 'consuming'");
            d.bus_id = jd.at("bus").get<std::string>();
            d.u0 = jd.at("u0").get<int>();
            d.p0 = jd.at("p0").get<double>();
            d.p_min = dvec(jd.at("p_min"), "p_min");
            d.p_max = dvec(jd.at("p_max"), "p_max");
            d.q_min = dvec(jd.at("q_min"), "q_min");
            d.q_max = dvec(jd.at("q_max"), "q_max");
            d.ramp_up = jd.at("ramp_up").get<double>();
            d.ramp_down = jd.at("ramp_down").get<double>();
            d.ramp_startup = jd.at("ramp_startup").get<double>();
            d.ramp_shutdown = jd.at("ramp_shutdown").get<double>();
            d.reserve_max = dvec(jd.at("reserve_max"), "reserve_max");
            d.reserve_cost = jd.at("reserve_cost").get<double>();
            d.startup_cost = jd.at("startup_cost").get<double>();
            d.shutdown_cost = jd.at("shutdown_cost").get<double>();
            d.on_cost = jd.at("on_cost").get<double>();
            for (const auto& jc : jd.at("cost")) d.cost.push_back(curve_from_json(jc));
            for (const auto& t : jd.value("must_run", json::array())) d.must_run.insert(t.get<int>());
            for (const auto& t : jd.value("forced_outage", json::array()))
                d.forced_outage.insert(t.get<int>());
            d.min_uptime = jd.value("min_uptime", 0.0);
            d.min_downtime = jd.value("min_downtime", 0.0);
            for (const auto& jw : jd.value("max_startups", json::array())) {
                CountWindow cw;
                for (const auto& t : jw.at("intervals")) cw.intervals.push_back(t.get<int>());
                cw.limit = jw.at("limit").get<int>();
                d.max_startups.push_back(cw);
            }
            for (const auto& jw : jd.value("max_shutdowns", json::array())) {
                CountWindow cw;
                for (const auto& t : jw.at("intervals")) cw.intervals.push_back(t.get<int>());
                cw.limit = jw.at("limit").get<int>();
                d.max_shutdowns.push_back(cw);
            }
            for (const auto& je : jd.value("energy_constraints", json::array())) {
                EnergyConstraint ec;
                ec.a0 = je.at("a0").get<double>();
                for (auto it = je.at("coeffs").begin(); it != je.at("coeffs").end(); ++it)
                    ec.coeffs[std::stoi(it.key())] = it.value().get<double>();
                d.energy_constraints.push_back(ec);
            }
            inst.devices.push_back(std::move(d));
        }
        for (const auto& js : j.at("shunts")) {
            Shunt s;
            s.id = js.at("id").get<std::string>();
            s.bus_id = js.at("bus").get<std::string>();
            s.y_step = complex_from_json(js.at("y_step"));
            s.u_min = js.at("u_min").get<int>();
            s.u_max = js.at("u_max").get<int>();
            inst.shunts.push_back(s);
        }
        for (const auto& jb : j.at("ac_branches")) {
            AcBranch b;
            b.id = jb.at("id").get<std::string>();
            b.from_id = jb.at("from_bus").get<std::string>();
            b.to_id = jb.at("to_bus").get<std::string>();
            b.y_sr = complex_from_json(jb.at("y_sr"));
            b.y_fr = complex_from_json(jb.at("y_fr"));
            b.y_to = complex_from_json(jb.at("y_to"));
            b.tau_min = jb.at("tau_min").get<double>();
            b.tau_max = jb.at("tau_max").get<double>();
            b.phi_min = jb.at("phi_min").get<double>();
            b.phi_max = jb.at("phi_max").get<double>();
            b.s_max = jb.at("s_max").get<double>();
            b.s_max_ctg = jb.at("s_max_ctg").get<double>();
            b.u0 = jb.at("u0").get<int>();
            inst.ac_branches.push_back(b);
        }
        for (const auto& jb : j.at("dc_branches")) {
            DcBranch b;
            b.id = jb.at("id").get<std::string>();
            b.from_id = jb.at("from_bus").get<std::string>();
            b.to_id = jb.at("to_bus").get<std::string>();
            b.p_max = jb.at("p_max").get<double>();
            b.q_min_fr = jb.at("q_min_fr").get<double>();
            b.q_max_fr = jb.at("q_max_fr").get<double>();
            b.q_min_to = jb.at("q_min_to").get<double>();
            b.q_max_to = jb.at("q_max_to").get<double>();
            inst.dc_branches.push_back(b);
        }
        for (const auto& jz : j.at("zones")) {
            ReserveZone z;
            z.id = jz.at("id").get<std::string>();
            z.sigma = jz.at("sigma").get<double>();
            z.shortage_penalty = jz.at("shortage_penalty").get<double>();
            for (const auto& m : jz.at("members")) z.member_ids.push_back(m.get<std::string>());
            inst.zones.push_back(z);
        }
        for (const auto& jc : j.at("contingencies")) {
            Contingency c;
            c.id = jc.at("id").get<std::string>();
            c.branch_id = jc.at("branch").get<std::string>();
            inst.contingencies.push_back(c);
        }
        const auto& jp = j.at("penalties");
        inst.penalties.c_p = jp.at("c_p").get<double>();
        inst.penalties.c_q = jp.at("c_q").get<double>();
        inst.penalties.c_s = jp.at("c_s").get<double>();
        inst.penalties.c_sw = jp.at("c_sw").get<double>();
        inst.penalties.c_en = jp.at("c_en").get<double>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance document: ") + e.what());
    }
    inst.finalize();
    return inst;
}

json solution_to_json(const Instance& inst, const Solution& sol) {
    const int nt = inst.num_t();
    auto row = [nt](const std::vector<double>& table, int e) {
        json a = json::array();
        for (int t = 0; t < nt; ++t) a.push_back(table[e * nt + t]);
        return a;
    };

    json j;
    j["format_version"] = "1";
    json buses = json::array();
    for (int i = 0; i < static_cast<int>(inst.buses.size()); ++i)
        buses.push_back(json{{"id", inst.buses[i].id},
                             {"v", row(sol.bus_v, i)},
                             {"theta", row(sol.bus_theta, i)}});
    j["buses"] = buses;

    json devices = json::array();
    for (int d = 0; d < static_cast<int>(inst.devices.size()); ++d)
        devices.push_back(json{{"id", inst.devices[d].id},
                               {"p", row(sol.dev_p, d)},
                               {"q", row(sol.dev_q, d)},
                               {"u", row(sol.dev_u, d)},
                               {"u_su", row(sol.dev_u_su, d)},
                               {"u_sd", row(sol.dev_u_sd, d)},
                               {"p_rsv", row(sol.dev_p_rsv, d)}});
    j["devices"] = devices;

    json shunts = json::array();
    for (int s = 0; s < static_cast<int>(inst.shunts.size()); ++s)
        shunts.push_back(json{{"id", inst.shunts[s].id}, {"u", row(sol.shunt_u, s)}});
    j["shunts"] = shunts;

    json acs = json::array();
    for (int b = 0; b < static_cast<int>(inst.ac_branches.size()); ++b)
        acs.push_back(json{{"id", inst.ac_branches[b].id},
                           {"u", row(sol.ac_u, b)},
                           {"u_su", row(sol.ac_u_su, b)},
                           {"u_sd", row(sol.ac_u_sd, b)},
                           {"tau", row(sol.ac_tau, b)},
                           {"phi", row(sol.ac_phi, b)}});
    j["ac_branches"] = acs;

    json dcs = json::array();
    for (int b = 0; b < static_cast<int>(inst.dc_branches.size()); ++b)
        dcs.push_back(json{{"id", inst.dc_branches[b].id},
                           {"p_fr", row(sol.dc_p_fr, b)},
                           {"q_fr", row(sol.dc_q_fr, b)},
                           {"q_to", row(sol.dc_q_to, b)}});
    j["dc_branches"] = dcs;
    return j;
}

Solution solution_from_json(const Instance& inst, const json& j) {
    const int nt = inst.num_t();
    Solution sol = Solution::sized_for(inst);

    auto fill = [&](std::vector<double>& table, int e, const json& section, const char* field,
                    const std::string& id) {
        if (!section.contains(field))
            throw MalformedSolution("entity '" + id + "' missing field '" + field + "'");
        const auto& arr = section.at(field);
        if (!arr.is_array() || static_cast<int>(arr.size()) != nt)
            throw MalformedSolution("entity '" + id + "' field '" + field + "' must have " +
                                    std::to_string(nt) + " entries");
        for (int t = 0; t < nt; ++t) {
            if (!arr[t].is_number())
                throw MalformedSolution("entity '" + id + "' field '" + field +
                                        "' has a non-numeric entry");
            table[e * nt + t] = arr[t].get<double>();
        }
    };

    auto index_section = [&](const json& doc, const char* key) {
        if (!doc.contains(key) || !doc.at(key).is_array())
            throw MalformedSolution(std::string("missing section '") + key + "'");
        std::unordered_map<std::string, const json*> by_id;
        for (const auto& row : doc.at(key)) {
            if (!row.contains("id")) throw MalformedSolution("entry without id");
            by_id[row.at("id").get<std::string>()] = &row;
        }
        return by_id;
    };

    try {
        auto buses = index_section(j, "buses");
        for (int i = 0; i < static_cast<int>(inst.buses.size()); ++i) {
            auto it = buses.find(inst.buses[i].id);
            if (it == buses.end())
                throw MalformedSolution("missing bus '" + inst.buses[i].id + "'");
            fill(sol.bus_v, i, *it->second, "v", inst.buses[i].id);
            fill(sol.bus_theta, i, *it->second, "theta", inst.buses[i].id);
        }
        auto devices = index_section(j, "devices");
        for (int d = 0; d < static_cast<int>(inst.devices.size()); ++d) {
            const std::string& id = inst.devices[d].id;
            auto it = devices.find(id);
            if (it == devices.end()) throw MalformedSolution("missing device '" + id + "'");
            fill(sol.dev_p, d, *it->second, "p", id);
            fill(sol.dev_q, d, *it->second, "q", id);
            fill(sol.dev_u, d, *it->second, "u", id);
            fill(sol.dev_u_su, d, *it->second, "u_su", id);
            fill(sol.dev_u_sd, d, *it->second, "u_sd", id);
            fill(sol.dev_p_rsv, d, *it->second, "p_rsv", id);
        }
        auto shunts = index_section(j, "shunts");
        for (int s = 0; s < static_cast<int>(inst.shunts.size()); ++s) {
            const std::string& id = inst.shunts[s].id;
            auto it = shunts.find(id);
            if (it == shunts.end()) throw MalformedSolution("missing shunt '" + id + "'");
            fill(sol.shunt_u, s, *it->second, "u", id);
        }
        auto acs = index_section(j, "ac_branches");
        for (int b = 0; b < static_cast<int>(inst.ac_branches.size()); ++b) {
            const std::string& id = inst.ac_branches[b].id;
            auto it = acs.find(id);
            if (it == acs.end()) throw MalformedSolution("missing ac_branch '" + id + "'");
            fill(sol.ac_u, b, *it->second, "u", id);
            fill(sol.ac_u_su, b, *it->second, "u_su", id);
            fill(sol.ac_u_sd, b, *it->second, "u_sd", id);
            fill(sol.ac_tau, b, *it->second, "tau", id);
            fill(sol.ac_phi, b, *it->second, "phi", id);
        }
        auto dcs = index_section(j, "dc_branches");
        for (int b = 0; b < static_cast<int>(inst.dc_branches.size()); ++b) {
            const std::string& id = inst.dc_branches[b].id;
            auto it = dcs.find(id);
            if (it == dcs.end()) throw MalformedSolution("missing dc_branch '" + id + "'");
            fill(sol.dc_p_fr, b, *it->second, "p_fr", id);
            fill(sol.dc_q_fr, b, *it->second, "q_fr", id);
            fill(sol.dc_q_to, b, *it->second, "q_to", id);
        }
    } catch (const json::exception& e) {
        throw MalformedSolution(std::string("solution document: ") + e.what());
    }

    if (!sol.all_finite()) throw MalformedSolution("solution contains non-finite values");
    return sol;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open file for writing: " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

Instance load_instance(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance JSON: ") + e.what());
    }
    return instance_from_json(j);
}

void save_instance(const Instance& inst, const std::string& path) {
    write_file_atomic(path, instance_to_json(inst).dump(2) + "\n");
}

Solution load_solution(const Instance& inst, const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedSolution(std::string("solution JSON: ") + e.what());
    }
    return solution_from_json(inst, j);
}

void save_solution(const Instance& inst, const Solution& sol, const std::string& path) {
    write_file_atomic(path, solution_to_json(inst, sol).dump() + "\n");
}

}  // namespace go3
