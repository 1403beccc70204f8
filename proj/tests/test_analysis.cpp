#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lqmarket/analysis.hpp"
#include "lqmarket/planner.hpp"
#include "lqmarket/price_response.hpp"
#include "lqmarket/scenario.hpp"
#include "test_support.hpp"

using namespace lqmarket;
using test_support::example_agent;
using test_support::random_agent;

namespace {

// A gentle box around the worked example agent, used to draw populations.
TypeBounds gentle_bounds() {
  TypeBounds bounds;
  bounds.a_lo = 0.8;
  bounds.a_hi = 1.2;
  bounds.b_lo = -1.3;
  bounds.b_hi = -0.7;
  bounds.beta_lo = -1.0;
  bounds.beta_hi = -0.3;
  bounds.d_lo = 0.1;
  bounds.d_hi = 0.7;
  bounds.x0_lo = -0.2;
  bounds.x0_hi = 0.2;
  return bounds;
}

MarketConfig sweep_config(int n, int k, bool binding) {
  MarketConfig config;
  config.horizon = k;
  config.population = n;
  config.wholesale = Vector::Ones(k);
  config.type_bounds = gentle_bounds();

  ScenarioSpec pilot;
  pilot.seed = 424242;
  pilot.config = config;
  pilot.config.caps = Vector::Zero(k);  // unused by the sampler
  const BidProfile sample = generate_population(pilot, 500);
  const Vector demand = aggregate_demand(sample, config.wholesale) / 500.0;
  config.caps.resize(k);
  for (int j = 0; j < k; ++j)
    config.caps[j] = binding ? n * (demand[j] - 0.35 * std::abs(demand[j]) - 0.1)
                             : n * (demand[j] + 0.35 * std::abs(demand[j]) + 0.5);
  return config;
}

BidProfile draw(const MarketConfig& config, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  spec.config = config;
  return generate_population(spec);
}

}  // namespace

TEST_CASE("induced utility at a truthful non-binding outcome") {
  MarketConfig config = sweep_config(6, 2, /*binding=*/false);
  const BidProfile bids = draw(config, 1);
  for (int i = 0; i < 3; ++i) {
    const AgentType& truth = bids.reports[i];
    const double induced = induced_utility(truth, bids, config, i);
    const double direct =
        utility(truth, respond(truth, config.wholesale), config.wholesale);
    CHECK(induced == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("induced utility is anonymous for identical agents") {
  MarketConfig config = sweep_config(4, 2, /*binding=*/true);
  BidProfile bids = draw(config, 2);
  bids.reports[2] = bids.reports[1];
  const double u1 = induced_utility(bids.reports[1], bids, config, 1);
  const double u2 = induced_utility(bids.reports[2], bids, config, 2);
  CHECK(u1 == doctest::Approx(u2).epsilon(1e-12));

  BidProfile swapped = bids;
  std::swap(swapped.reports[1], swapped.reports[2]);
  CHECK(induced_utility(bids.reports[1], swapped, config, 2) ==
        doctest::Approx(u1).epsilon(1e-12));
}

TEST_CASE("deviation search basics") {
  MarketConfig config = sweep_config(5, 2, /*binding=*/true);
  const BidProfile bids = draw(config, 3);
  BidProfile others;
  for (int j = 1; j < bids.size(); ++j) others.reports.push_back(bids.reports[j]);

  SweepSpec only_truth;
  only_truth.budget = 1;
  const DeviationReport trivial =
      best_deviation(bids.reports[0], others, config, only_truth);
  CHECK(trivial.gain == 0.0);
  CHECK(trivial.price_shift == 0.0);

  SweepSpec small;
  small.budget = 30;
  SweepSpec large;
  large.budget = 120;
  const DeviationReport a = best_deviation(bids.reports[0], others, config, small);
  const DeviationReport b = best_deviation(bids.reports[0], others, config, large);
  CHECK(a.gain >= 0.0);
  CHECK(b.gain >= a.gain);              // larger budget is a superset
  CHECK(b.price_shift >= a.price_shift);
  CHECK(b.gain == b.best_deviation_utility - b.truthful_utility);

  SweepSpec empty;
  empty.budget = 0;
  CHECK_THROWS_AS(best_deviation(bids.reports[0], others, config, empty),
                  input_error);
}

TEST_CASE("non-binding caps leave no room to gain") {
  MarketConfig config = sweep_config(5, 2, /*binding=*/false);
  const BidProfile bids = draw(config, 4);
  BidProfile others;
  for (int j = 1; j < bids.size(); ++j) others.reports.push_back(bids.reports[j]);
  SweepSpec sweep;
  sweep.budget = 80;
  const DeviationReport report =
      best_deviation(bids.reports[0], others, config, sweep);
  CHECK(report.price_shift <= 1e-10);
  CHECK(report.gain <= 1e-7);
}

TEST_CASE("a singleton message space forces zero gain") {
  // One agent, box collapsed onto its type: the only report is the truth.
  MarketConfig config;
  config.horizon = 2;
  config.population = 1;
  config.wholesale = Vector::Ones(2);
  config.caps = Vector::Constant(2, 10.0);
  TypeBounds& tb = config.type_bounds;
  tb.a_lo = tb.a_hi = 1.0;
  tb.b_lo = tb.b_hi = -1.0;
  tb.beta_lo = tb.beta_hi = -0.5;
  tb.d_lo = tb.d_hi = 0.0;
  tb.x0_lo = tb.x0_hi = 0.0;
  const AgentType truth = example_agent();
  BidProfile others;  // empty: the probed agent is the whole population
  SweepSpec sweep;
  sweep.budget = 50;
  const DeviationReport report = best_deviation(truth, others, config, sweep);
  CHECK(report.gain == 0.0);
  CHECK(report.price_shift == 0.0);
}

TEST_CASE("epsilon sweep needs at least two sizes") {
  MarketConfig config = sweep_config(4, 2, /*binding=*/true);
  SweepSpec sweep;
  CHECK_THROWS_AS(empirical_epsilon(config, {4}, {1}, sweep, false), input_error);
  CHECK_THROWS_AS(empirical_epsilon(config, {4, 8}, {}, sweep, false), input_error);
}

TEST_CASE("epsilon sweep on non-binding scenarios is flat at zero") {
  MarketConfig config = sweep_config(4, 2, /*binding=*/false);
  SweepSpec sweep;
  sweep.budget = 25;
  sweep.probe_agents = 2;
  const EpsilonTable table =
      empirical_epsilon(config, {4, 16}, {11}, sweep, false);
  for (const EpsilonRow& row : table.rows) CHECK(row.eps_hat <= 1e-7);
}

TEST_CASE("epsilon sweep maxima never shrink with more seeds") {
  MarketConfig config = sweep_config(4, 2, /*binding=*/true);
  Vector per_capita = config.caps / 4.0;
  MarketConfig base = config;
  base.caps = per_capita;
  SweepSpec sweep;
  sweep.budget = 20;
  sweep.probe_agents = 2;
  const EpsilonTable one = empirical_epsilon(base, {4, 16}, {11}, sweep, true);
  const EpsilonTable two =
      empirical_epsilon(base, {4, 16}, {11, 12}, sweep, true);
  for (std::size_t r = 0; r < one.rows.size(); ++r) {
    CHECK(two.rows[r].eps_hat >= one.rows[r].eps_hat);
    CHECK(two.rows[r].eps1_hat >= one.rows[r].eps1_hat);
  }
}

TEST_CASE("price impact falls roughly inversely with population") {
  MarketConfig base = sweep_config(1, 2, /*binding=*/true);  // per-capita caps
  SweepSpec sweep;
  sweep.budget = 40;
  sweep.probe_agents = 2;
  const EpsilonTable table =
      empirical_epsilon(base, {10, 40, 160}, {21}, sweep, true);
  CHECK(table.rows[0].eps1_hat > table.rows[2].eps1_hat);
  CHECK(table.slope_eps1 == doctest::Approx(-1.0).epsilon(0.25));
}

TEST_CASE("constant estimates on the collapsed worked example") {
  // Collapse the box onto the worked agent; the response-Jacobian bound
  // must reproduce the exact infinity norm of [[-1, 1], [1, -2]].
  const AgentType agent = example_agent();
  MarketConfig config;
  config.horizon = 2;
  config.population = 2;
  config.wholesale = Vector::Ones(2);
  config.caps = Vector::Constant(2, 10.0);
  config.type_bounds.a_lo = config.type_bounds.a_hi = 1.0;
  config.type_bounds.b_lo = config.type_bounds.b_hi = -1.0;
  config.type_bounds.beta_lo = config.type_bounds.beta_hi = -0.5;
  config.type_bounds.d_lo = config.type_bounds.d_hi = 0.0;
  config.type_bounds.x0_lo = config.type_bounds.x0_hi = 0.0;
  BidProfile bids;
  bids.reports = {agent, agent};

  const ConstantEstimates constants = estimate_constants(config, bids, 1);
  CHECK(constants.c3 == doctest::Approx(3.0));
  CHECK(constants.eps1 <= 1e-10);      // prices pinned at wholesale
  CHECK(constants.eps_bound <= 1e-8);
  CHECK(constants.c1 >= 0.0);
  CHECK(constants.c2 >= 0.0);
  CHECK(std::isfinite(constants.c1));

  // Measured response norms never exceed the box bound.
  CHECK(response_jacobian(agent).cwiseAbs().rowwise().sum().maxCoeff() <=
        constants.c3 + 1e-12);
}

TEST_CASE("shrinking the type box never increases the constants") {
  MarketConfig wide = sweep_config(4, 3, /*binding=*/true);
  MarketConfig narrow = wide;
  narrow.type_bounds.a_lo = 0.9;
  narrow.type_bounds.a_hi = 1.1;
  narrow.type_bounds.b_lo = -1.1;
  narrow.type_bounds.b_hi = -0.9;
  narrow.type_bounds.beta_lo = -0.8;
  narrow.type_bounds.beta_hi = -0.4;
  narrow.type_bounds.d_lo = 0.2;
  narrow.type_bounds.d_hi = 0.5;
  narrow.type_bounds.x0_lo = -0.1;
  narrow.type_bounds.x0_hi = 0.1;
  const BidProfile wide_pop = draw(wide, 5);
  const BidProfile narrow_pop = draw(narrow, 5);
  const ConstantEstimates a = estimate_constants(wide, wide_pop, 1);
  const ConstantEstimates b = estimate_constants(narrow, narrow_pop, 1);
  CHECK(b.c1 <= a.c1);
  CHECK(b.c2 <= a.c2);
  CHECK(b.c3 <= a.c3);
}

TEST_CASE("measured response norms respect the analytic bound across draws") {
  MarketConfig config = sweep_config(8, 3, /*binding=*/true);
  const BidProfile bids = draw(config, 6);
  const ConstantEstimates constants = estimate_constants(config, bids, 1);
  for (const AgentType& agent : bids.reports) {
    const double measured =
        response_jacobian(agent).cwiseAbs().rowwise().sum().maxCoeff();
    CHECK(measured <= constants.c3 + 1e-12);
  }
}

TEST_CASE("sampled gains stay under the incentive bound") {
  MarketConfig config = sweep_config(12, 2, /*binding=*/true);
  const BidProfile bids = draw(config, 7);
  const ConstantEstimates constants = estimate_constants(config, bids, 2);
  SweepSpec sweep;
  sweep.budget = 60;
  for (int i = 0; i < 3; ++i) {
    BidProfile others;
    for (int j = 0; j < bids.size(); ++j)
      if (j != i) others.reports.push_back(bids.reports[j]);
    const DeviationReport report =
        best_deviation(bids.reports[i], others, config, sweep);
    const double bound =
        config.horizon * (constants.c1 * constants.c3 + constants.c2) *
        report.price_shift;
    CHECK(report.gain <= bound + 1e-6);
  }
}

TEST_CASE("planner and mechanism agree on truthful types") {
  std::mt19937_64 rng(11001);
  for (int trial = 0; trial < 10; ++trial) {
    MarketConfig config = sweep_config(6, 2, trial % 2 == 0);
    const BidProfile bids = draw(config, 100 + trial);
    const ImplementationCheck check =
        check_implementation(bids.reports, config);
    CHECK(check.matches);
    CHECK(check.max_gap <= 1e-6);
  }
}

TEST_CASE("slope fit recovers a known power law") {
  const std::vector<double> x = {10, 100, 1000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 / v);
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), input_error);
}
