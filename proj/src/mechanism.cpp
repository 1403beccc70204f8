#include "lqmarket/mechanism.hpp"

#include <cmath>

#include "lqmarket/detail/clearing.hpp"
#include "lqmarket/price_response.hpp"

namespace lqmarket {

ClearingOutcome clear_market(const BidProfile& bids, const MarketConfig& config) {
  config.validate();
  bids.validate(config);  // message-space membership, names the agent
  const detail::ClearingCore core = detail::clear_core(bids, config);

  ClearingOutcome outcome;
  outcome.prices = core.prices;
  outcome.allocation = core.allocation;
  outcome.welfare_reported = core.welfare;
  outcome.binding.resize(config.horizon);
  for (int j = 0; j < config.horizon; ++j)
    outcome.binding[j] = core.duals[j] > 0.0;  // exact-cap ties stay non-binding
  outcome.nu_residual =
      nu_residual(outcome.prices, bids, config).lpNorm<Eigen::Infinity>();
  return outcome;
}

Vector nu_residual(const Vector& prices, const BidProfile& bids,
                   const MarketConfig& config, const Vector& alpha1,
                   const Vector& alpha2) {
  const int k = config.horizon;
  if (prices.size() != k || alpha1.size() != k || alpha2.size() != k)
    throw input_error("nu residual inputs must have one entry per period");
  for (int j = 0; j < k; ++j)
    if (!(alpha1[j] > 0.0) || !(alpha2[j] > 0.0))
      throw input_error("nu residual scales must be positive");

  const Vector aggregate = aggregate_demand(bids, prices, config.theta1);
  Vector nu(k);
  for (int j = 0; j < k; ++j) {
    if (prices[j] > config.wholesale[j])
      nu[j] = alpha1[j] * (aggregate[j] - config.caps[j]);
    else
      nu[j] = alpha2[j] * (prices[j] - config.wholesale[j]);
  }
  return nu;
}

Vector nu_residual(const Vector& prices, const BidProfile& bids,
                   const MarketConfig& config) {
  const Vector ones = Vector::Ones(config.horizon);
  return nu_residual(prices, bids, config, ones, ones);
}

PriceJacobian price_jacobian_wrt_report(const BidProfile& bids,
                                        const MarketConfig& config,
                                        int agent_index, double step) {
  detail::validate_shapes(bids, config);
  if (agent_index < 0 || agent_index >= bids.size())
    throw input_error("agent index out of range");
  if (!(step > 0.0)) throw input_error("probe step must be positive");

  const int k = config.horizon;
  const int dim = config.bid_dim();
  const AgentType& base_report = bids.reports[agent_index];
  const Vector base_coords = flatten_report(base_report);

  auto binding_of = [&](const detail::ClearingCore& core) {
    std::vector<bool> binding(k);
    for (int j = 0; j < k; ++j) binding[j] = core.duals[j] > 0.0;
    return binding;
  };
  const detail::ClearingCore base = detail::clear_core(bids, config);
  const std::vector<bool> base_binding = binding_of(base);

  PriceJacobian result;
  result.matrix = Matrix::Zero(k, dim);
  result.at_kink = false;

  BidProfile probe = bids;
  for (int l = 0; l < dim; ++l) {
    Vector coords = base_coords;
    coords[l] = base_coords[l] + step;
    probe.reports[agent_index] = unflatten_report(coords, base_report.x0);
    const detail::ClearingCore plus = detail::clear_core(probe, config);
    coords[l] = base_coords[l] - step;
    probe.reports[agent_index] = unflatten_report(coords, base_report.x0);
    const detail::ClearingCore minus = detail::clear_core(probe, config);
    result.matrix.col(l) = (plus.prices - minus.prices) / (2.0 * step);
    if (binding_of(plus) != base_binding || binding_of(minus) != base_binding)
      result.at_kink = true;
  }
  probe.reports[agent_index] = base_report;
  return result;
}

}  // namespace lqmarket
