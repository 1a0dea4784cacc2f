#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mred/traffic_sim.hpp"

namespace mred {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Config file missing or unreadable.
struct ConfigFileError : ConfigError {
    using ConfigError::ConfigError;
};
// Config file is not well-formed JSON.
struct ConfigParseError : ConfigError {
    using ConfigError::ConfigError;
};
// Well-formed but invalid: unknown key, wrong type, or an invariant
// violation; the message names the offending fields.
struct ConfigValidationError : ConfigError {
    using ConfigError::ConfigError;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads and validates a config. `path_or_preset` is a JSON file path, or
// one of the bundled preset names when no such file exists. Omitted keys
// keep their defaults.
SimConfig parse_config(const std::string& path_or_preset);
// Same, from JSON text (no file involved).
SimConfig parse_config_text(const std::string& json_text);

std::vector<std::string> preset_names();
SimConfig preset_config(const std::string& name);
std::string config_to_json_text(const SimConfig& config);

// Header `step,arrivals,drops,overflow_drops,queue_len,avg`, one row per
// step. Numbers are written with std::to_chars: locale-independent,
// shortest round-trip form, byte-stable for identical stats.
void write_step_csv(const SimStats& stats, const std::string& path);

struct CompareResult {
    std::uint64_t seed = 0;
    SimStats red_stats;
    SimStats mred_stats;
    double utilisation_diff = 0.0;  // red minus mred
};

// Runs the same config under both gateways with the same seed (and so the
// same per-step traffic schedule).
CompareResult compare_runs(const SimConfig& base, std::uint64_t seed);

// key=value summaries
void print_run_summary(std::ostream& out, const SimConfig& config,
                       const SimStats& stats);
void print_compare_summary(std::ostream& out, const CompareResult& result);

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace mred
