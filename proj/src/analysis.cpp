#include "lqmarket/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lqmarket/detail/clearing.hpp"
#include "lqmarket/planner.hpp"
#include "lqmarket/price_response.hpp"
#include "lqmarket/scenario.hpp"

namespace lqmarket {

namespace {

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  int candidate = 2;
  while (static_cast<int>(primes.size()) < count) {
    bool is_prime = true;
    for (int p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

struct ReportBox {
  Vector lo;
  Vector hi;
};

ReportBox report_box(const TypeBounds& bounds, int k) {
  ReportBox box;
  box.lo.resize(3 * k + 1);
  box.hi.resize(3 * k + 1);
  box.lo[0] = bounds.a_lo;
  box.hi[0] = bounds.a_hi;
  for (int j = 0; j < k; ++j) {
    box.lo[1 + j] = bounds.b_lo;
    box.hi[1 + j] = bounds.b_hi;
    box.lo[1 + k + j] = bounds.beta_lo;
    box.hi[1 + k + j] = bounds.beta_hi;
    box.lo[1 + 2 * k + j] = bounds.d_lo;
    box.hi[1 + 2 * k + j] = bounds.d_hi;
  }
  return box;
}

// Deterministic misreport stream: truth, the two full box corners, each
// coordinate pushed to its extremes, small coordinatewise nudges of the
// truth, then a Halton fill of the whole box. A longer prefix is always a
// superset, which keeps the sampled gain monotone in the budget. The nudges
// matter for large populations, where the profitable manipulations are
// small report perturbations that lean on the price rather than distort the
// own allocation.
Vector candidate_coords(int index, const Vector& truth_coords,
                        const ReportBox& box,
                        const std::vector<int>& primes) {
  const int dim = static_cast<int>(truth_coords.size());
  if (index == 0) return truth_coords;
  if (index == 1) return box.lo;
  if (index == 2) return box.hi;
  index -= 3;
  if (index < 2 * dim) {
    Vector coords = truth_coords;
    const int coord = index / 2;
    coords[coord] = (index % 2 == 0) ? box.lo[coord] : box.hi[coord];
    return coords;
  }
  for (const double scale : {0.05, 0.005}) {
    index -= 2 * dim;
    if (index < 2 * dim) {
      Vector coords = truth_coords;
      const int coord = index / 2;
      const double nudge = scale * (box.hi[coord] - box.lo[coord]);
      coords[coord] += (index % 2 == 0) ? -nudge : nudge;
      coords[coord] =
          std::min(box.hi[coord], std::max(box.lo[coord], coords[coord]));
      return coords;
    }
  }
  const std::uint64_t halton_index = static_cast<std::uint64_t>(index - 2 * dim) + 1;
  Vector coords(dim);
  for (int j = 0; j < dim; ++j) {
    const double u = halton(halton_index, primes[j]);
    coords[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * u;
  }
  return coords;
}

}  // namespace

double induced_utility(const AgentType& truth, const BidProfile& bids,
                       const MarketConfig& config, int agent_index) {
  if (agent_index < 0 || agent_index >= bids.size())
    throw input_error("agent index out of range");
  const ClearingOutcome outcome = clear_market(bids, config);
  return utility(truth, outcome.allocation.actions.row(agent_index),
                 outcome.prices);
}

DeviationReport best_deviation(const AgentType& truth, const BidProfile& others,
                               const MarketConfig& config,
                               const SweepSpec& sweep) {
  if (sweep.budget < 1) throw input_error("deviation search budget must be >= 1");
  if (others.size() + 1 != config.population)
    throw input_error("others profile must have population-1 reports");

  const int k = config.horizon;
  const int probe_index = others.size();
  BidProfile bids = others;
  bids.reports.push_back(truth);

  const ClearingOutcome base = clear_market(bids, config);
  const double truthful =
      utility(truth, base.allocation.actions.row(probe_index), base.prices);

  const ReportBox box = report_box(config.type_bounds, k);
  const std::vector<int> primes = first_primes(3 * k + 1);
  const Vector truth_coords = flatten_report(truth);

  DeviationReport report;
  report.agent_index = probe_index;
  report.best_misreport = truth;
  report.truthful_utility = truthful;
  report.best_deviation_utility = truthful;
  report.gain = 0.0;
  report.price_shift = 0.0;

  for (int c = 0; c < sweep.budget; ++c) {
    const Vector coords = candidate_coords(c, truth_coords, box, primes);
    const AgentType candidate = unflatten_report(coords, truth.x0);
    bids.reports[probe_index] = candidate;
    const ClearingOutcome outcome = clear_market(bids, config);
    const double value =
        utility(truth, outcome.allocation.actions.row(probe_index), outcome.prices);
    const double shift =
        (outcome.prices - base.prices).lpNorm<Eigen::Infinity>();
    report.price_shift = std::max(report.price_shift, shift);
    if (value > report.best_deviation_utility) {
      report.best_deviation_utility = value;
      report.best_misreport = candidate;
    }
  }
  report.gain = report.best_deviation_utility - report.truthful_utility;
  return report;
}

EpsilonTable empirical_epsilon(const MarketConfig& base,
                               const std::vector<int>& sizes,
                               const std::vector<std::uint64_t>& seeds,
                               const SweepSpec& sweep, bool caps_per_capita) {
  if (sizes.size() < 2)
    throw input_error("need at least two population sizes for a trend fit");
  if (seeds.empty()) throw input_error("need at least one seed");

  EpsilonTable table;
  std::vector<double> ns, eps, eps1;
  for (int n : sizes) {
    MarketConfig config = base;
    config.population = n;
    if (caps_per_capita) config.caps = base.caps * static_cast<double>(n);

    EpsilonRow row;
    row.population = n;
    BidProfile first_population;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      ScenarioSpec spec;
      spec.seed = seeds[s];
      spec.config = config;
      const BidProfile population = generate_population(spec);
      if (s == 0) first_population = population;
      const int probes = std::min(sweep.probe_agents, n);
      for (int i = 0; i < probes; ++i) {
        BidProfile others;
        others.reports.reserve(n - 1);
        for (int j = 0; j < n; ++j)
          if (j != i) others.reports.push_back(population.reports[j]);
        DeviationReport report =
            best_deviation(population.reports[i], others, config, sweep);
        row.eps_hat = std::max(row.eps_hat, report.gain);
        row.eps1_hat = std::max(row.eps1_hat, report.price_shift);
      }
    }
    const ConstantEstimates constants =
        estimate_constants(config, first_population, sweep.probe_agents);
    row.eps_bound = config.horizon *
                    (constants.c1 * constants.c3 + constants.c2) * row.eps1_hat;
    table.rows.push_back(row);
    ns.push_back(static_cast<double>(n));
    eps.push_back(row.eps_hat);
    eps1.push_back(row.eps1_hat);
  }
  table.slope_eps = loglog_slope(ns, eps);
  table.slope_eps1 = loglog_slope(ns, eps1);
  return table;
}

namespace {

// Worst-case response coefficient magnitudes over the type box. Row sums
// reproduce the exact Jacobian infinity norm when the box collapses.
struct CoefficientBounds {
  double own_first;  // |theta_1|
  double own;        // |theta_k|, k >= 2
  double off;        // |theta_{k,k-1}| = |theta_{k-1,k}|
};

CoefficientBounds coefficient_bounds(const TypeBounds& b, Theta1Variant variant) {
  const double beta_min = std::abs(b.beta_hi);  // smallest magnitude
  const double b_min = std::abs(b.b_hi);
  const double denom = 2.0 * beta_min * b_min * b_min;
  CoefficientBounds out;
  out.own_first = 1.0 / denom;
  if (variant == Theta1Variant::Paper) out.own_first *= b.a_hi;
  out.own = (1.0 + b.a_hi * b.a_hi) / denom;
  out.off = b.a_hi / denom;
  return out;
}

double jacobian_norm_bound(const TypeBounds& bounds, int k, Theta1Variant variant) {
  const CoefficientBounds c = coefficient_bounds(bounds, variant);
  if (k == 1) return c.own_first;
  double worst = std::max(c.own_first + c.off, c.own + c.off);  // first/last row
  if (k > 2) worst = std::max(worst, c.own + 2.0 * c.off);      // interior rows
  return worst;
}

double affine_bound(const TypeBounds& b) {
  const double d_abs = std::max(std::abs(b.d_lo), std::abs(b.d_hi));
  const double x0_abs = std::max(std::abs(b.x0_lo), std::abs(b.x0_hi));
  return (d_abs + b.a_hi * std::max(d_abs, x0_abs)) / std::abs(b.b_hi);
}

// Upper bound on the largest eigenvalue of the negated valuation Hessian
// over the type box (row-sum bound on the entrywise worst case).
double hessian_norm_bound(const TypeBounds& b, int k) {
  const double beta_max = std::abs(b.beta_lo);
  const double b_max = std::abs(b.b_lo);
  double worst = 0.0;
  for (int j = 0; j < k; ++j) {
    double row = 0.0;
    for (int l = 0; l < k; ++l) {
      double entry = 0.0;
      for (int m = std::max(j, l); m < k; ++m)
        entry += 2.0 * beta_max * std::pow(b.a_hi, 2 * m - j - l) * b_max * b_max;
      row += entry;
    }
    worst = std::max(worst, row);
  }
  return worst;
}

}  // namespace

ConstantEstimates estimate_constants(const MarketConfig& config,
                                     const BidProfile& scenario,
                                     int probe_agents) {
  detail::validate_shapes(scenario, config);
  const int k = config.horizon;
  const int n = config.population;
  const TypeBounds& bounds = config.type_bounds;

  ConstantEstimates out;
  out.c3 = jacobian_norm_bound(bounds, k, config.theta1);
  const double aff_max = affine_bound(bounds);
  const double cap_abs = config.caps.cwiseAbs().maxCoeff();
  const double wholesale_abs = config.wholesale.cwiseAbs().maxCoeff();

  // Reachable price box: wholesale plus a bound on the cap multipliers,
  // valid for any admissible report profile.
  const double hess_bound = hessian_norm_bound(bounds, k);
  const double demand_at_wholesale = out.c3 * wholesale_abs + aff_max;
  const double dual_bound = std::sqrt(static_cast<double>(k)) * hess_bound *
                            (demand_at_wholesale + cap_abs / n);
  double price_abs = 0.0;
  for (int j = 0; j < k; ++j) {
    price_abs = std::max(price_abs, std::abs(config.wholesale[j]));
    price_abs = std::max(price_abs, std::abs(config.wholesale[j] + dual_bound));
  }

  // Reachable actions and states.
  const double action_abs = out.c3 * price_abs + aff_max;
  const double x0_abs = std::max(std::abs(bounds.x0_lo), std::abs(bounds.x0_hi));
  const double b_max = std::abs(bounds.b_lo);
  double state_abs = x0_abs;
  double state = x0_abs;
  for (int j = 0; j < k; ++j) {
    state = bounds.a_hi * state + b_max * action_abs;
    state_abs = std::max(state_abs, state);
  }
  const double d_abs = std::max(std::abs(bounds.d_lo), std::abs(bounds.d_hi));
  const double deviation_abs = state_abs + d_abs;

  double geometric = 0.0;
  double power = 1.0;
  for (int j = 0; j < k; ++j) {
    geometric += power;
    power *= bounds.a_hi;
  }
  const double beta_max = std::abs(bounds.beta_lo);
  out.c1 = 2.0 * beta_max * b_max * deviation_abs * geometric + price_abs;
  out.c2 = action_abs;

  // Measured price impact: first-order extrapolation of the price Jacobian
  // over the message box, backstopped by full-corner probes.
  const ReportBox box = report_box(bounds, k);
  const Vector width = box.hi - box.lo;
  const int probes = std::max(1, std::min(probe_agents, n));
  const detail::ClearingCore base = detail::clear_core(scenario, config);
  BidProfile probe = scenario;
  for (int i = 0; i < probes; ++i) {
    const PriceJacobian jac = price_jacobian_wrt_report(scenario, config, i);
    for (int r = 0; r < k; ++r)
      out.eps1 = std::max(out.eps1, jac.matrix.row(r).cwiseAbs().dot(width));

    for (const Vector& corner : {box.lo, box.hi}) {
      probe.reports[i] = unflatten_report(corner, scenario.reports[i].x0);
      const detail::ClearingCore shifted = detail::clear_core(probe, config);
      out.eps1 = std::max(out.eps1, (shifted.prices - base.prices)
                                        .lpNorm<Eigen::Infinity>());
    }
    probe.reports[i] = scenario.reports[i];
  }
  out.c4 = out.eps1 * n;
  out.eps_bound = k * (out.c1 * out.c3 + out.c2) * out.eps1;
  return out;
}

ImplementationCheck check_implementation(const std::vector<AgentType>& truths,
                                         const MarketConfig& config,
                                         double tol) {
  BidProfile bids;
  bids.reports = truths;
  const PlannerSolution planned = solve_social_choice(bids, config);
  const ClearingOutcome outcome = clear_market(bids, config);
  ImplementationCheck check;
  check.max_gap = (planned.allocation.actions - outcome.allocation.actions)
                      .cwiseAbs()
                      .maxCoeff();
  check.matches = check.max_gap <= tol;
  return check;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw input_error("slope fit needs matching vectors with >= 2 points");
  const int n = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    lx[i] = std::log(std::max(x[i], 1e-300));
    ly[i] = std::log(std::max(y[i], 1e-300));
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den == 0.0) throw input_error("slope fit needs distinct x values");
  return num / den;
}

}  // namespace lqmarket
