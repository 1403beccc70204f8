#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqmarket/model.hpp"

namespace lqmarket {

struct SamplingSpec {
  std::string distribution = "uniform";  // only uniform is supported
};

/// A named, fully reproducible experiment: seed + market + type box.
struct ScenarioSpec {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  MarketConfig config;
  SamplingSpec sampling;
  bool caps_per_capita = false;  // config.caps already scaled by population
  Vector prices;                 // optional price input for simulate/respond
  bool has_prices = false;
};

/// Draws config.population types i.i.d. uniformly within the type box.
/// The seed fully determines the population; a larger population drawn from
/// the same seed extends the smaller one.
BidProfile generate_population(const ScenarioSpec& spec);
BidProfile generate_population(const ScenarioSpec& spec, int population_override);

/// Reads and validates a scenario config file (JSON). Throws config_error
/// with a field-level diagnostic on malformed input.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& json_text);

/// Stable hex digest of (config, seed); identical inputs, identical digest.
std::string scenario_digest(const ScenarioSpec& spec);

struct RunRecord {
  std::string scenario_name;
  std::string command;
  std::string timestamp;  // ISO 8601 UTC
  std::string input_digest;
  std::vector<std::string> outputs;
  std::string tool_version;
};

/// Writes the sidecar JSON next to a run's outputs.
void write_run_record(const RunRecord& record, const std::string& path);

/// Shortest decimal string that round-trips the double (up to 17 digits).
std::string format_g17(double value);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace lqmarket
