#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "capa/scenario.hpp"

namespace capa {

// Command-line overrides layered on top of a parsed scenario. Unset optionals
// defer to the scenario's [numerics] block.
struct RunOptions {
    std::string out_dir = "capa_out";
    std::optional<std::uint64_t> seed;
    std::optional<int> quadrature_order;
};

// What a run produced: the written files (relative to out_dir), accumulated
// warnings, per-stage wall-clock timings, and a task-specific summary that is
// also embedded in report.json.
struct RunReport {
    std::string task;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> stage_seconds;
    nlohmann::json summary;
    std::string report_path;
};

// Executes the scenario's task, writing its CSV outputs plus report.json into
// options.out_dir (created when missing). CSV bodies depend only on the
// scenario and the effective seed, never on wall-clock time. Errors raised by
// the numeric layers are rethrown with the task name appended.
RunReport run(const Scenario& scenario, const RunOptions& options = {});

}  // namespace capa
