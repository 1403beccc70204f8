#include "lqmarket/planner.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lqmarket/detail/clearing.hpp"
#include "lqmarket/lcp.hpp"
#include "lqmarket/price_response.hpp"

namespace lqmarket {

namespace detail {

void validate_shapes(const BidProfile& bids, const MarketConfig& config) {
  config.validate();
  if (bids.size() != config.population)
    throw input_error("bid profile size must match the configured population");
  for (int i = 0; i < bids.size(); ++i) {
    bids.reports[i].validate();
    if (bids.reports[i].horizon() != config.horizon)
      throw input_error("report horizon does not match market horizon");
  }
}

ClearingCore clear_core(const BidProfile& bids, const MarketConfig& config) {
  const int k = config.horizon;
  const int n = config.population;

  // Aggregate affine demand: sum of per-report tridiagonal responses.
  Vector agg_diag = Vector::Zero(k);
  Vector agg_off = Vector::Zero(std::max(0, k - 1));
  Vector agg_affine = Vector::Zero(k);
  for (const AgentType& report : bids.reports) {
    const ResponseCoefficients c = coefficients(report, config.theta1);
    agg_diag += c.diag;
    agg_affine += c.affine;
    if (k > 1) agg_off += c.sub;  // symmetric: sub == super entrywise
  }

  // Demand at wholesale.
  Vector base = agg_affine;
  for (int i = 0; i < k; ++i) {
    base[i] += agg_diag[i] * config.wholesale[i];
    if (i > 0) base[i] += agg_off[i - 1] * config.wholesale[i - 1];
    if (i + 1 < k) base[i] += agg_off[i] * config.wholesale[i + 1];
  }

  // Cap multipliers: w = (caps - demand at wholesale) + (-M) xi, with the
  // usual complementarity between slack and multiplier.
  const LcpResult lcp = solve_tridiagonal_lcp(-agg_diag, -agg_off,
                                              config.caps - base);

  ClearingCore core;
  core.duals = lcp.z;
  core.prices = config.wholesale + lcp.z;
  core.allocation.actions.resize(n, k);
  core.allocation.states.resize(n, k + 1);
  core.welfare = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector actions = respond(bids.reports[i], core.prices, config.theta1);
    core.allocation.actions.row(i) = actions;
    core.allocation.states.row(i) =
        simulate_trajectory(bids.reports[i], actions);
    core.welfare += valuation(bids.reports[i], actions);
  }
  for (int j = 0; j < k; ++j)
    core.welfare -= config.wholesale[j] * core.allocation.actions.col(j).sum();
  return core;
}

}  // namespace detail

PlannerSolution solve_social_choice(const BidProfile& bids,
                                    const MarketConfig& config) {
  detail::validate_shapes(bids, config);
  const detail::ClearingCore core = detail::clear_core(bids, config);
  PlannerSolution solution;
  solution.allocation = core.allocation;
  solution.duals = core.duals;
  solution.welfare = core.welfare;
  solution.kkt_residual = kkt_residual(bids, config, solution);
  return solution;
}

double kkt_residual(const BidProfile& bids, const MarketConfig& config,
                    const PlannerSolution& solution) {
  detail::validate_shapes(bids, config);
  const int k = config.horizon;
  const int n = config.population;
  if (solution.allocation.actions.rows() != n ||
      solution.allocation.actions.cols() != k || solution.duals.size() != k)
    throw input_error("solution shapes do not match the market");

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector actions = solution.allocation.actions.row(i);
    const Vector grad = valuation_gradient(bids.reports[i], actions);
    for (int j = 0; j < k; ++j)
      worst = std::max(worst, std::abs(-grad[j] + config.wholesale[j] +
                                       solution.duals[j]));
  }
  for (int j = 0; j < k; ++j) {
    const double aggregate = solution.allocation.actions.col(j).sum();
    const double slack = aggregate - config.caps[j];
    worst = std::max(worst, std::max(0.0, slack));            // primal
    worst = std::max(worst, std::max(0.0, -solution.duals[j]));  // dual
    worst = std::max(worst, std::abs(solution.duals[j] * slack));
  }
  return worst;
}

GridSpec GridSpec::box(double lo, double hi, int points) {
  GridSpec grid;
  grid.lo = Vector::Constant(1, lo);
  grid.hi = Vector::Constant(1, hi);
  grid.points = points;
  return grid;
}

GridSpec GridSpec::around(const Matrix& center, double radius, int points) {
  if (points < 3 || points % 2 == 0)
    throw input_error("centered grids need an odd point count >= 3");
  GridSpec grid;
  const int dims = static_cast<int>(center.size());
  grid.lo.resize(dims);
  grid.hi.resize(dims);
  const int k = static_cast<int>(center.cols());
  for (int d = 0; d < dims; ++d) {
    const double c = center(d / k, d % k);
    grid.lo[d] = c - radius;
    grid.hi[d] = c + radius;
  }
  grid.points = points;
  return grid;
}

BruteForceResult brute_force_welfare(const BidProfile& bids,
                                     const MarketConfig& config,
                                     const GridSpec& grid) {
  detail::validate_shapes(bids, config);
  const int k = config.horizon;
  const int n = config.population;
  const int dims = n * k;
  if (n > 3 || k > 3 || grid.points > 21 || grid.points < 1)
    throw input_error("brute force oracle limited to N<=3, K<=3, points<=21");
  if (grid.lo.size() != grid.hi.size() ||
      (grid.lo.size() != 1 && grid.lo.size() != dims))
    throw input_error("grid bounds must have one entry or one per coordinate");
  auto bound = [&](const Vector& v, int d) {
    return v.size() == 1 ? v[0] : v[d];
  };
  for (int d = 0; d < dims; ++d)
    if (!(bound(grid.lo, d) <= bound(grid.hi, d)))
      throw input_error("grid bounds must have lo <= hi");
  double total = 1.0;
  for (int i = 0; i < dims; ++i) total *= grid.points;
  if (total > 2e8) throw input_error("brute force grid too large");

  std::vector<double> spacing(dims, 0.0);
  for (int d = 0; d < dims; ++d)
    spacing[d] = grid.points > 1
                     ? (bound(grid.hi, d) - bound(grid.lo, d)) / (grid.points - 1)
                     : 0.0;
  std::vector<int> odometer(dims, 0);
  Matrix actions(n, k);
  BruteForceResult best;
  best.feasible = false;
  best.welfare = -std::numeric_limits<double>::infinity();
  best.actions = Matrix::Zero(n, k);

  const double cap_tol = 1e-9;
  while (true) {
    for (int d = 0; d < dims; ++d)
      actions(d / k, d % k) = bound(grid.lo, d) + spacing[d] * odometer[d];

    bool feasible = true;
    for (int j = 0; j < k && feasible; ++j)
      feasible = actions.col(j).sum() <= config.caps[j] + cap_tol;
    if (feasible) {
      double welfare = 0.0;
      for (int i = 0; i < n; ++i)
        welfare += valuation(bids.reports[i], actions.row(i));
      for (int j = 0; j < k; ++j)
        welfare -= config.wholesale[j] * actions.col(j).sum();
      if (welfare > best.welfare) {
        best.feasible = true;
        best.welfare = welfare;
        best.actions = actions;
      }
    }

    int d = 0;
    while (d < dims && ++odometer[d] == grid.points) odometer[d++] = 0;
    if (d == dims) break;
  }
  return best;
}

}  // namespace lqmarket
