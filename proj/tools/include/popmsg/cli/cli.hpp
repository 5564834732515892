#pragma once

// Batch front end: run, sweep and reach commands over the protocol library.
// Configuration comes from a JSON file and/or flags; flags win.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popmsg/analysis.hpp"

namespace popmsg::cli {

enum ExitCode : int { ok = 0, bad_config = 1, violation = 2, budget_exhausted = 3, overflow = 4 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string protocol;
    std::vector<std::uint64_t> ns;
    /// Explicit seed list; empty means `seed`, `seed + 1`, ... for `trials`.
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    std::optional<std::uint64_t> budget;
    /// Snapshot stride in parallel time; 0 disables the time series.
    double stride = 0.0;
    std::string out;
    unsigned jobs = 1;
    std::string log;
    std::size_t cap = 1000000;
    nlohmann::json params = nlohmann::json::object();

    [[nodiscard]] std::vector<std::uint64_t> seed_list() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Reads and validates a config file. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);

/// Protocol ids accepted by run and sweep.
const std::vector<std::string>& run_protocols();
/// Protocol ids accepted by reach.
const std::vector<std::string>& reach_protocols();

struct RunResult {
    std::string protocol;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t budget = 0;
    std::uint64_t interactions = 0;
    double parallel_time = 0.0;
    bool converged = false;
    bool violation = false;
    std::string message;
    /// Protocol-specific scalar summarized by sweeps.
    double value = 0.0;
    nlohmann::json details = nlohmann::json::object();
    std::vector<analysis::SeriesRow> series;
};

/// One execution. Throws ConfigError for unusable parameters.
RunResult run_one(const ExperimentConfig& cfg, std::uint64_t n, std::uint64_t seed);

nlohmann::json to_json(const RunResult& r);

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_reach(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line, e.g. {"popmsg", "run", "--protocol", "junta", ...}.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace popmsg::cli
