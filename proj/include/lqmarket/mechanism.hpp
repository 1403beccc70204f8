#pragma once

#include <vector>

#include "lqmarket/model.hpp"

namespace lqmarket {

/// Output of the uniform-price clearing: one price vector for everyone,
/// each agent allocated its price response at that price.
struct ClearingOutcome {
  Vector prices;              // cleared uniform prices, >= wholesale
  Allocation allocation;      // allocation(i) = respond(reports[i], prices)
  std::vector<bool> binding;  // per period: cap met with positive markup
  double nu_residual;         // infinity norm of the clearing residual map
  double welfare_reported;    // welfare of the reports at the outcome
};

/// Clears the market on the submitted reports. Reports outside the message
/// space are rejected with an input_error naming the agent; solver failures
/// surface as solver_error.
ClearingOutcome clear_market(const BidProfile& bids, const MarketConfig& config);

/// Residual map of the clearing conditions at an arbitrary price vector:
///   nu_k = alpha1_k * (aggregate_k(p) - D_k)   if p_k > wholesale_k
///   nu_k = alpha2_k * (p_k - wholesale_k)      otherwise.
/// A cleared outcome drives every entry to zero.
Vector nu_residual(const Vector& prices, const BidProfile& bids,
                   const MarketConfig& config, const Vector& alpha1,
                   const Vector& alpha2);

/// Convenience overload with unit scales.
Vector nu_residual(const Vector& prices, const BidProfile& bids,
                   const MarketConfig& config);

struct PriceJacobian {
  Matrix matrix;  // K x (3K+1), d(cleared price)/d(report of one agent)
  bool at_kink;   // binding set changed under a probe step
};

/// Central finite differences of clear_market over one agent's report
/// coordinates. Probes may step slightly outside the message space; they
/// bypass the box check. When a probe flips the binding set the result is
/// flagged rather than trusted.
PriceJacobian price_jacobian_wrt_report(const BidProfile& bids,
                                        const MarketConfig& config,
                                        int agent_index, double step = 1e-5);

}  // namespace lqmarket
