#include "lqmarket/scenario.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lqmarket {

namespace {

using nlohmann::json;

// 53-bit mantissa uniform; identical across platforms for a given seed.
double next_uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Vector parse_vector(const json& node, int expected, const std::string& field) {
  if (!node.is_array())
    throw config_error("field '" + field + "' must be an array of numbers");
  if (expected >= 0 && static_cast<int>(node.size()) != expected) {
    std::ostringstream msg;
    msg << "field '" << field << "' must have " << expected << " entries, got "
        << node.size();
    throw config_error(msg.str());
  }
  Vector out(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number())
      throw config_error("field '" + field + "' contains a non-number");
    out[static_cast<int>(i)] = node[i].get<double>();
  }
  return out;
}

std::pair<double, double> parse_pair(const json& node, const std::string& field) {
  const Vector v = parse_vector(node, 2, field);
  return {v[0], v[1]};
}

const json& require_field(const json& parent, const std::string& key,
                          const std::string& context) {
  auto it = parent.find(key);
  if (it == parent.end())
    throw config_error("missing field '" + key + "' in " + context);
  return *it;
}

}  // namespace

BidProfile generate_population(const ScenarioSpec& spec) {
  return generate_population(spec, spec.config.population);
}

BidProfile generate_population(const ScenarioSpec& spec, int population_override) {
  const MarketConfig& config = spec.config;
  config.type_bounds.validate();
  if (population_override < 1)
    throw input_error("population must be at least 1");
  if (spec.sampling.distribution != "uniform")
    throw config_error("unsupported sampling distribution '" +
                       spec.sampling.distribution + "'");
  const int k = config.horizon;
  const TypeBounds& b = config.type_bounds;
  std::mt19937_64 rng(spec.seed);
  BidProfile profile;
  profile.reports.reserve(population_override);
  for (int i = 0; i < population_override; ++i) {
    AgentType agent;
    agent.a_coef = next_uniform(rng, b.a_lo, b.a_hi);
    agent.b_coefs.resize(k);
    agent.betas.resize(k);
    agent.targets.resize(k);
    for (int j = 0; j < k; ++j) agent.b_coefs[j] = next_uniform(rng, b.b_lo, b.b_hi);
    for (int j = 0; j < k; ++j) agent.betas[j] = next_uniform(rng, b.beta_lo, b.beta_hi);
    for (int j = 0; j < k; ++j) agent.targets[j] = next_uniform(rng, b.d_lo, b.d_hi);
    agent.x0 = next_uniform(rng, b.x0_lo, b.x0_hi);
    agent.validate();
    profile.reports.push_back(std::move(agent));
  }
  return profile;
}

ScenarioSpec parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw config_error(std::string("config is not valid JSON: ") + err.what());
  }
  if (!root.is_object()) throw config_error("config root must be an object");

  ScenarioSpec spec;
  spec.name = root.value("scenario_name", std::string("scenario"));
  spec.seed = require_field(root, "seed", "config").get<std::uint64_t>();

  const json& market = require_field(root, "market", "config");
  spec.config.horizon = require_field(market, "horizon", "market").get<int>();
  if (spec.config.horizon < 1) throw config_error("market.horizon must be >= 1");
  spec.config.population =
      require_field(market, "population", "market").get<int>();
  spec.config.caps = parse_vector(require_field(market, "caps", "market"),
                                  spec.config.horizon, "market.caps");
  spec.config.wholesale =
      parse_vector(require_field(market, "wholesale", "market"),
                   spec.config.horizon, "market.wholesale");
  spec.caps_per_capita = market.value("caps_per_capita", false);
  if (spec.caps_per_capita)
    spec.config.caps *= static_cast<double>(spec.config.population);
  spec.config.theta1 = market.value("paper_theta1", false)
                           ? Theta1Variant::Paper
                           : Theta1Variant::Foc;

  const json& bounds = require_field(root, "type_bounds", "config");
  TypeBounds& tb = spec.config.type_bounds;
  std::tie(tb.a_lo, tb.a_hi) = parse_pair(require_field(bounds, "a", "type_bounds"), "type_bounds.a");
  std::tie(tb.b_lo, tb.b_hi) = parse_pair(require_field(bounds, "b", "type_bounds"), "type_bounds.b");
  std::tie(tb.beta_lo, tb.beta_hi) = parse_pair(require_field(bounds, "beta", "type_bounds"), "type_bounds.beta");
  std::tie(tb.d_lo, tb.d_hi) = parse_pair(require_field(bounds, "d", "type_bounds"), "type_bounds.d");
  std::tie(tb.x0_lo, tb.x0_hi) = parse_pair(require_field(bounds, "x0", "type_bounds"), "type_bounds.x0");

  if (root.contains("sampling")) {
    const json& sampling = root["sampling"];
    if (!sampling.is_object()) throw config_error("sampling must be an object");
    spec.sampling.distribution =
        sampling.value("distribution", std::string("uniform"));
  }
  if (root.contains("prices")) {
    spec.prices = parse_vector(root["prices"], spec.config.horizon, "prices");
    spec.has_prices = true;
  }

  try {
    spec.config.validate();
  } catch (const input_error& err) {
    throw config_error(std::string("invalid market configuration: ") + err.what());
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string scenario_digest(const ScenarioSpec& spec) {
  json canonical;
  canonical["seed"] = spec.seed;
  canonical["horizon"] = spec.config.horizon;
  canonical["population"] = spec.config.population;
  canonical["caps_per_capita"] = spec.caps_per_capita;
  canonical["paper_theta1"] = spec.config.theta1 == Theta1Variant::Paper;
  auto dump_vector = [](const Vector& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (int i = 0; i < v.size(); ++i) out.push_back(format_g17(v[i]));
    return out;
  };
  canonical["caps"] = dump_vector(spec.config.caps);
  canonical["wholesale"] = dump_vector(spec.config.wholesale);
  const TypeBounds& tb = spec.config.type_bounds;
  canonical["type_bounds"] = {
      format_g17(tb.a_lo),    format_g17(tb.a_hi),  format_g17(tb.b_lo),
      format_g17(tb.b_hi),    format_g17(tb.beta_lo), format_g17(tb.beta_hi),
      format_g17(tb.d_lo),    format_g17(tb.d_hi),  format_g17(tb.x0_lo),
      format_g17(tb.x0_hi)};
  canonical["sampling"] = spec.sampling.distribution;

  const std::string bytes = canonical.dump();
  std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(hex);
}

void write_run_record(const RunRecord& record, const std::string& path) {
  json j;
  j["scenario_name"] = record.scenario_name;
  j["command"] = record.command;
  j["timestamp"] = record.timestamp;
  j["input_digest"] = record.input_digest;
  j["outputs"] = record.outputs;
  j["tool_version"] = record.tool_version;
  std::ofstream out(path);
  if (!out) throw config_error("cannot write run record '" + path + "'");
  out << j.dump(2) << "\n";
}

std::string format_g17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return std::string(buffer);
}

}  // namespace lqmarket
