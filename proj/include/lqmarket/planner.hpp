#pragma once

#include "lqmarket/model.hpp"

namespace lqmarket {

struct PlannerSolution {
  Allocation allocation;
  Vector duals;         // xi_k >= 0, one per period
  double welfare;       // objective value at the allocation
  double kkt_residual;  // infinity norm over stationarity/feasibility/slackness
};

/// Welfare-maximizing allocation under the per-period aggregate caps, for
/// reported types. Solved by clearing the cap complementarity system at
/// prices wholesale + duals, so each agent's allocation is its price
/// response at the shadow price.
PlannerSolution solve_social_choice(const BidProfile& bids,
                                    const MarketConfig& config);

/// Recomputes the KKT residual of a candidate solution from scratch:
/// stationarity via the valuation gradient (independent of the closed-form
/// response), primal feasibility, dual feasibility, complementary slackness.
double kkt_residual(const BidProfile& bids, const MarketConfig& config,
                    const PlannerSolution& solution);

/// Uniform grid over the flattened joint actions (agent-major, period-minor).
/// lo/hi hold either one entry (the same box for every coordinate) or one
/// entry per coordinate.
struct GridSpec {
  Vector lo;
  Vector hi;
  int points = 21;

  static GridSpec box(double lo, double hi, int points);
  /// Grid of `points` nodes per coordinate centered on the given actions,
  /// spanning +/- radius; the center itself is always a node.
  static GridSpec around(const Matrix& center, double radius, int points);
};

struct BruteForceResult {
  bool feasible;   // false when no grid point satisfies the caps
  double welfare;  // best feasible grid welfare (when feasible)
  Matrix actions;  // N x K best feasible grid point
};

/// Exhaustive grid search over joint actions; a slow lower-bound oracle for
/// small instances. Refuses problems with more than ~2e8 grid evaluations
/// or with N > 3, K > 3, points > 21.
BruteForceResult brute_force_welfare(const BidProfile& bids,
                                     const MarketConfig& config,
                                     const GridSpec& grid);

}  // namespace lqmarket
