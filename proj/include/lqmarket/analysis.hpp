#pragma once

#include <cstdint>
#include <vector>

#include "lqmarket/mechanism.hpp"
#include "lqmarket/model.hpp"

namespace lqmarket {

/// Result of a misreport search for one agent.
struct DeviationReport {
  int agent_index = -1;
  AgentType best_misreport;        // sampled report with the largest gain
  double truthful_utility = 0.0;   // true utility when reporting the truth
  double best_deviation_utility = 0.0;
  double gain = 0.0;               // best_deviation_utility - truthful_utility
  double price_shift = 0.0;        // max over samples of ||Delta p||_inf
};

/// Lipschitz and price-impact constants for one scenario.
struct ConstantEstimates {
  double c1 = 0.0;        // stage utility in actions, over the reachable set
  double c2 = 0.0;        // stage utility in prices (max reachable |action|)
  double c3 = 0.0;        // price response in prices (response Jacobian norm)
  double c4 = 0.0;        // eps1 * N, the fitted price-impact constant
  double eps1 = 0.0;      // estimated max price shift a single report causes
  double eps_bound = 0.0; // K * (c1*c3 + c2) * eps1
};

/// Sampling budget for misreport searches.
struct SweepSpec {
  int budget = 500;       // candidate reports per probed agent (incl. truth)
  int probe_agents = 4;   // how many agents to probe per population
};

/// The agent's true utility at the market outcome when the profile `bids`
/// is submitted (bids[agent_index] may differ from `truth`).
double induced_utility(const AgentType& truth, const BidProfile& bids,
                       const MarketConfig& config, int agent_index);

/// Maximizes induced utility over a deterministic stream of candidate
/// misreports (truth, box corners, per-coordinate extremes and small
/// nudges, then a Halton fill of the message box), holding the other
/// reports fixed. The truthful report is always the first candidate, so
/// the gain is never negative and never shrinks with a larger budget.
DeviationReport best_deviation(const AgentType& truth, const BidProfile& others,
                               const MarketConfig& config, const SweepSpec& sweep);

struct EpsilonRow {
  int population = 0;
  double eps_hat = 0.0;    // max sampled deviation gain
  double eps1_hat = 0.0;   // max sampled price shift
  double eps_bound = 0.0;  // K * (c1*c3 + c2) * eps1_hat
};

struct EpsilonTable {
  std::vector<EpsilonRow> rows;
  double slope_eps = 0.0;   // log-log slope of eps_hat vs population
  double slope_eps1 = 0.0;  // log-log slope of eps1_hat vs population
};

/// Draws a population per (size, seed) cell, probes deviations, and records
/// the per-size maxima plus log-log slope fits. When caps_per_capita is set
/// the base caps are interpreted per agent and scaled by each sweep size.
EpsilonTable empirical_epsilon(const MarketConfig& base,
                               const std::vector<int>& sizes,
                               const std::vector<std::uint64_t>& seeds,
                               const SweepSpec& sweep,
                               bool caps_per_capita = false);

/// c1..c3 from analytic bounds over the type box and the reachable price
/// box; eps1 from price-Jacobian sweeps plus corner probes on the scenario.
ConstantEstimates estimate_constants(const MarketConfig& config,
                                     const BidProfile& scenario,
                                     int probe_agents = 4);

struct ImplementationCheck {
  bool matches = false;
  double max_gap = 0.0;  // infinity norm between planner and mechanism actions
};

/// Compares the planner's allocation on the true types with the mechanism
/// outcome under truthful reporting.
ImplementationCheck check_implementation(const std::vector<AgentType>& truths,
                                         const MarketConfig& config,
                                         double tol = 1e-6);

/// Least-squares slope of log(y) against log(x); y entries are floored at
/// 1e-300 to keep degenerate all-zero columns finite.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lqmarket
