#include "lqmarket/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "lqmarket/analysis.hpp"
#include "lqmarket/mechanism.hpp"
#include "lqmarket/planner.hpp"
#include "lqmarket/price_response.hpp"
#include "lqmarket/scenario.hpp"

namespace lqmarket {

namespace {

std::string iso_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return std::string(buffer);
}

std::string sibling_path(const std::string& out, const std::string& suffix) {
  const std::size_t dot = out.rfind('.');
  if (dot == std::string::npos || out.find('/', dot) != std::string::npos)
    return out + suffix;
  return out.substr(0, dot) + suffix + out.substr(dot);
}

class CsvFile {
 public:
  CsvFile(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw config_error("cannot write output file '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  CsvFile& field(const std::string& value) {
    if (started_) out_ << ',';
    out_ << value;
    started_ = true;
    return *this;
  }
  CsvFile& field(double value) { return field(format_g17(value)); }
  CsvFile& field(int value) { return field(std::to_string(value)); }
  void end_row() {
    out_ << '\n';
    started_ = false;
  }

 private:
  std::ofstream out_;
  bool started_ = false;
};

void write_record(const ScenarioSpec& spec, const std::string& command,
                  const std::vector<std::string>& outputs) {
  if (outputs.empty()) return;
  RunRecord record;
  record.scenario_name = spec.name;
  record.command = command;
  record.timestamp = iso_timestamp();
  record.input_digest = scenario_digest(spec);
  record.outputs = outputs;
  record.tool_version = kToolVersion;
  write_run_record(record, outputs.front() + ".run.json");
}

void write_period_table(const std::string& path, const MarketConfig& config,
                        const Vector& prices, const Matrix& actions,
                        const std::vector<bool>& binding) {
  CsvFile csv(path, {"period", "wholesale", "price", "dual", "aggregate",
                     "cap", "binding"});
  for (int j = 0; j < config.horizon; ++j) {
    csv.field(j + 1)
        .field(config.wholesale[j])
        .field(prices[j])
        .field(prices[j] - config.wholesale[j])
        .field(actions.col(j).sum())
        .field(config.caps[j])
        .field(binding[j] ? 1 : 0);
    csv.end_row();
  }
}

void write_allocations(const std::string& path, const Allocation& allocation) {
  CsvFile csv(path, {"agent", "period", "action", "state_next"});
  for (int i = 0; i < allocation.agents(); ++i)
    for (int j = 0; j < allocation.horizon(); ++j) {
      csv.field(i).field(j + 1).field(allocation.actions(i, j))
          .field(allocation.states(i, j + 1));
      csv.end_row();
    }
}

Vector scenario_prices(const ScenarioSpec& spec) {
  return spec.has_prices ? spec.prices : spec.config.wholesale;
}

std::vector<bool> binding_from_duals(const Vector& duals) {
  std::vector<bool> binding(duals.size());
  for (int j = 0; j < duals.size(); ++j) binding[j] = duals[j] > 0.0;
  return binding;
}

struct VerifyContext {
  bool all_passed = true;
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) all_passed = false;
  }
};

int run_verify(const ScenarioSpec& spec, double tolerance) {
  const MarketConfig& config = spec.config;
  const BidProfile population = generate_population(spec);
  VerifyContext ctx;

  bool in_box = true;
  for (const AgentType& agent : population.reports)
    in_box = in_box && config.type_bounds.contains(agent, 1e-12);
  ctx.check("population-within-bounds", in_box);

  const ClearingOutcome outcome = clear_market(population, config);

  double dyn_gap = 0.0;
  for (int i = 0; i < population.size(); ++i) {
    const Vector states =
        simulate_trajectory(population.reports[i],
                            outcome.allocation.actions.row(i));
    dyn_gap = std::max(dyn_gap, (states.transpose() -
                                 outcome.allocation.states.row(i))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  ctx.check("dynamics-consistency", dyn_gap <= 1e-12, format_g17(dyn_gap));

  double oracle_gap = 0.0, foc_gap = 0.0, alloc_gap = 0.0;
  const int sample = std::min(population.size(), 5);
  for (int i = 0; i < sample; ++i) {
    const AgentType& agent = population.reports[i];
    const Vector closed = respond(agent, outcome.prices, config.theta1);
    const Vector oracle = respond_oracle(agent, outcome.prices);
    oracle_gap = std::max(oracle_gap,
                          (closed - oracle).lpNorm<Eigen::Infinity>());
    const Vector grad = valuation_gradient(agent, closed) - outcome.prices;
    foc_gap = std::max(foc_gap, grad.lpNorm<Eigen::Infinity>());
    alloc_gap = std::max(
        alloc_gap, (closed.transpose() - outcome.allocation.actions.row(i))
                       .cwiseAbs()
                       .maxCoeff());
  }
  ctx.check("oracle-equivalence", oracle_gap <= tolerance, format_g17(oracle_gap));
  ctx.check("foc-residual", foc_gap <= 1e-8, format_g17(foc_gap));
  ctx.check("allocation-is-price-response", alloc_gap <= 1e-8,
            format_g17(alloc_gap));

  const PlannerSolution planned = solve_social_choice(population, config);
  ctx.check("planner-kkt", planned.kkt_residual <= 1e-7,
            format_g17(planned.kkt_residual));
  ctx.check("mechanism-nu-residual", outcome.nu_residual <= 1e-7,
            format_g17(outcome.nu_residual));

  const double welfare_gap =
      std::abs(outcome.welfare_reported - planned.welfare) /
      std::max(1.0, std::abs(planned.welfare));
  ctx.check("welfare-consistency", welfare_gap <= 1e-6, format_g17(welfare_gap));

  const ImplementationCheck impl =
      check_implementation(population.reports, config, tolerance);
  ctx.check("implementation", impl.matches, format_g17(impl.max_gap));

  const ClearingOutcome again = clear_market(population, config);
  const bool identical = again.prices == outcome.prices &&
                         again.allocation.actions == outcome.allocation.actions;
  ctx.check("determinism", identical);

  return ctx.all_passed ? kExitOk : kExitVerifyError;
}

std::vector<std::uint64_t> sweep_seeds(const ScenarioSpec& spec) {
  return {spec.seed};
}

Vector per_capita_caps(const ScenarioSpec& spec) {
  if (!spec.caps_per_capita) return spec.config.caps;
  return spec.config.caps / static_cast<double>(spec.config.population);
}

int dispatch(const std::string& command, const ScenarioSpec& spec,
             const std::string& out, const std::vector<int>& sizes,
             int budget, double tolerance) {
  const MarketConfig& config = spec.config;

  if (command == "simulate") {
    const BidProfile population = generate_population(spec);
    const Vector prices = scenario_prices(spec);
    CsvFile csv(out, {"agent", "period", "price", "action", "state_next"});
    for (int i = 0; i < population.size(); ++i) {
      const AgentType& agent = population.reports[i];
      const Vector actions = respond(agent, prices, config.theta1);
      const Vector states = simulate_trajectory(agent, actions);
      for (int j = 0; j < config.horizon; ++j) {
        csv.field(i).field(j + 1).field(prices[j]).field(actions[j])
            .field(states[j + 1]);
        csv.end_row();
      }
    }
    write_record(spec, command, {out});
    return kExitOk;
  }

  if (command == "respond") {
    const BidProfile population = generate_population(spec);
    const AgentType& agent = population.reports.front();
    const Vector prices = scenario_prices(spec);
    const Vector actions = respond(agent, prices, config.theta1);
    const Vector states = simulate_trajectory(agent, actions);
    CsvFile csv(out, {"period", "price", "action", "state_next"});
    for (int j = 0; j < config.horizon; ++j) {
      csv.field(j + 1).field(prices[j]).field(actions[j]).field(states[j + 1]);
      csv.end_row();
    }
    write_record(spec, command, {out});
    return kExitOk;
  }

  if (command == "planner") {
    const BidProfile population = generate_population(spec);
    const PlannerSolution solution = solve_social_choice(population, config);
    const std::string alloc_path = sibling_path(out, "_allocations");
    write_period_table(out, config, config.wholesale + solution.duals,
                       solution.allocation.actions,
                       binding_from_duals(solution.duals));
    write_allocations(alloc_path, solution.allocation);
    std::cout << "welfare=" << format_g17(solution.welfare)
              << " kkt_residual=" << format_g17(solution.kkt_residual) << "\n";
    write_record(spec, command, {out, alloc_path});
    return kExitOk;
  }

  if (command == "clear") {
    const BidProfile population = generate_population(spec);
    const ClearingOutcome outcome = clear_market(population, config);
    const std::string alloc_path = sibling_path(out, "_allocations");
    write_period_table(out, config, outcome.prices, outcome.allocation.actions,
                       outcome.binding);
    write_allocations(alloc_path, outcome.allocation);
    std::cout << "welfare_reported=" << format_g17(outcome.welfare_reported)
              << " nu_residual=" << format_g17(outcome.nu_residual) << "\n";
    write_record(spec, command, {out, alloc_path});
    return kExitOk;
  }

  if (command == "ic-sweep" || command == "price-impact") {
    if (sizes.size() < 2)
      throw config_error("--sizes needs at least two comma-separated entries");
    MarketConfig base = config;
    base.caps = per_capita_caps(spec);
    SweepSpec sweep;
    sweep.budget = budget;
    const EpsilonTable table = empirical_epsilon(
        base, sizes, sweep_seeds(spec), sweep, spec.caps_per_capita);
    if (command == "ic-sweep") {
      CsvFile csv(out, {"population", "eps_hat", "eps1_hat", "eps_bound"});
      for (const EpsilonRow& row : table.rows) {
        csv.field(row.population).field(row.eps_hat).field(row.eps1_hat)
            .field(row.eps_bound);
        csv.end_row();
      }
    } else {
      CsvFile csv(out, {"population", "eps1_hat", "eps1_times_n"});
      for (const EpsilonRow& row : table.rows) {
        csv.field(row.population).field(row.eps1_hat)
            .field(row.eps1_hat * row.population);
        csv.end_row();
      }
    }
    std::cout << "slope_eps=" << format_g17(table.slope_eps)
              << " slope_eps1=" << format_g17(table.slope_eps1) << "\n";
    write_record(spec, command, {out});
    return kExitOk;
  }

  if (command == "verify") return run_verify(spec, tolerance);

  throw config_error("unknown command '" + command + "'");
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Uniform-price market clearing for linear-quadratic agents"};
  app.require_subcommand(1);

  std::string config_path, out_path, sizes_text = "10,100,1000";
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  bool paper_theta1 = false;
  int budget = 500;
  double tolerance = 1e-6;

  const std::vector<std::string> names = {"simulate", "respond",     "planner",
                                          "clear",    "ic-sweep",    "price-impact",
                                          "verify"};
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario config file (JSON)")
        ->required();
    if (name != "verify") sub->add_option("--out", out_path, "output CSV path")->required();
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed_override = true; });
    sub->add_flag("--paper-theta1", paper_theta1,
                  "use the printed first-period coefficient variant");
    if (name == "ic-sweep" || name == "price-impact")
      sub->add_option("--sizes", sizes_text, "comma-separated population sizes");
    if (name == "ic-sweep" || name == "price-impact" || name == "verify")
      sub->add_option("--budget", budget, "misreport samples per probed agent");
    sub->add_option("--tolerance", tolerance, "verification tolerance");
  }

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  std::string program = "lqmarket";
  argv.push_back(program.data());
  for (std::string& arg : storage) argv.push_back(arg.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);  // --help
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfigError;
  }

  try {
    ScenarioSpec spec = load_scenario(config_path);
    if (has_seed_override) spec.seed = seed_override;
    if (paper_theta1) spec.config.theta1 = Theta1Variant::Paper;
    const std::string command = app.get_subcommands().front()->get_name();
    std::vector<int> sizes;
    std::stringstream sizes_stream(sizes_text);
    std::string token;
    while (std::getline(sizes_stream, token, ',')) {
      if (!token.empty()) sizes.push_back(std::stoi(token));
    }
    return dispatch(command, spec, out_path, sizes, budget, tolerance);
  } catch (const config_error& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const input_error& err) {
    std::cerr << "input error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const solver_error& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return kExitSolverError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace lqmarket
