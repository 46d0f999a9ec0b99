#pragma once

#include <stdexcept>
#include <string>

#include "go3/model.hpp"
#include "json.hpp"

namespace go3 {

// Raised when an instance or solution document cannot be interpreted.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a solution document parses as JSON but is incomplete or
// inconsistent with the instance (missing entities, wrong array lengths,
// non-finite values). The evaluator scores such files 0.
struct MalformedSolution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const Instance& inst, const Solution& sol);
Solution solution_from_json(const Instance& inst, const nlohmann::json& j);

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

Solution load_solution(const Instance& inst, const std::string& path);
// Writes to path + ".tmp" then renames, so readers never observe a torn file.
void save_solution(const Instance& inst, const Solution& sol, const std::string& path);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace go3
