#include "lqmarket/model.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace lqmarket {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw input_error(message);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

void AgentType::validate() const {
  const int k = horizon();
  require(k >= 1, "agent horizon must be at least 1");
  require(betas.size() == k && targets.size() == k,
          "agent vectors must share one horizon length");
  require(std::isfinite(a_coef) && a_coef > 0.0, "a_coef must be positive");
  require(std::isfinite(x0), "x0 must be finite");
  for (int i = 0; i < k; ++i) {
    require(std::isfinite(b_coefs[i]) && b_coefs[i] < 0.0,
            "b_coefs must be negative");
    require(std::isfinite(betas[i]) && betas[i] < 0.0, "betas must be negative");
    require(std::isfinite(targets[i]), "targets must be finite");
  }
}

void TypeBounds::validate() const {
  require(a_lo <= a_hi && b_lo <= b_hi && beta_lo <= beta_hi && d_lo <= d_hi &&
              x0_lo <= x0_hi,
          "type bounds must have lo <= hi");
  require(a_lo > 0.0, "a bounds must be positive");
  require(b_hi < 0.0, "b bounds must be negative");
  require(beta_hi < 0.0, "beta bounds must be negative");
}

bool TypeBounds::contains(const AgentType& t, double tol) const {
  auto in = [tol](double v, double lo, double hi) {
    return v >= lo - tol && v <= hi + tol;
  };
  if (!in(t.a_coef, a_lo, a_hi) || !in(t.x0, x0_lo, x0_hi)) return false;
  for (int i = 0; i < t.horizon(); ++i) {
    if (!in(t.b_coefs[i], b_lo, b_hi)) return false;
    if (!in(t.betas[i], beta_lo, beta_hi)) return false;
    if (!in(t.targets[i], d_lo, d_hi)) return false;
  }
  return true;
}

void MarketConfig::validate() const {
  require(horizon >= 1, "horizon must be at least 1");
  require(population >= 1, "population must be at least 1");
  require(caps.size() == horizon, "caps must have one entry per period");
  require(wholesale.size() == horizon,
          "wholesale must have one entry per period");
  require(all_finite(caps) && all_finite(wholesale),
          "caps and wholesale must be finite");
  type_bounds.validate();
}

void BidProfile::validate(const MarketConfig& config) const {
  require(!reports.empty(), "bid profile must contain at least one report");
  require(size() == config.population,
          "bid profile size must match the configured population");
  for (int i = 0; i < size(); ++i) {
    const AgentType& r = reports[i];
    std::ostringstream who;
    who << "agent " << i;
    if (r.horizon() != config.horizon)
      throw input_error(who.str() + ": report horizon does not match market");
    r.validate();
    if (!config.type_bounds.contains(r, 1e-12))
      throw input_error(who.str() + ": report outside the message space");
  }
}

Vector simulate_trajectory(const AgentType& agent, const Vector& actions) {
  agent.validate();
  const int k = agent.horizon();
  if (actions.size() != k)
    throw input_error("actions length does not match agent horizon");
  Vector states(k + 1);
  states[0] = agent.x0;
  for (int i = 0; i < k; ++i)
    states[i + 1] = agent.a_coef * states[i] + agent.b_coefs[i] * actions[i];
  return states;
}

double valuation(const AgentType& agent, const Vector& actions) {
  const Vector states = simulate_trajectory(agent, actions);
  double total = 0.0;
  for (int i = 0; i < agent.horizon(); ++i) {
    const double dev = states[i + 1] - agent.targets[i];
    total += agent.betas[i] * dev * dev;
  }
  return total;
}

Vector valuation_gradient(const AgentType& agent, const Vector& actions) {
  agent.validate();
  const int k = agent.horizon();
  if (actions.size() != k)
    throw input_error("actions length does not match agent horizon");
  // Extended precision: the adjoint recursion cancels terms that grow like
  // a_coef^K, which double accumulation would surface as gradient noise.
  std::vector<long double> x(k + 1);
  x[0] = agent.x0;
  for (int i = 0; i < k; ++i)
    x[i + 1] = static_cast<long double>(agent.a_coef) * x[i] +
               static_cast<long double>(agent.b_coefs[i]) * actions[i];
  Vector grad(k);
  long double adj = 0.0L;  // sum_{m>=i} 2 beta_m (x_{m+1}-d_m) A^{m-i}
  for (int i = k - 1; i >= 0; --i) {
    const long double dev = x[i + 1] - static_cast<long double>(agent.targets[i]);
    adj = 2.0L * static_cast<long double>(agent.betas[i]) * dev +
          static_cast<long double>(agent.a_coef) * adj;
    grad[i] = static_cast<double>(static_cast<long double>(agent.b_coefs[i]) * adj);
  }
  return grad;
}

Matrix valuation_hessian(const AgentType& agent) {
  agent.validate();
  const int k = agent.horizon();
  // d x_{m+1} / d a_j = A^{m-j} B_j for m >= j.
  Matrix sensitivity = Matrix::Zero(k, k);  // (m, j)
  for (int j = 0; j < k; ++j) {
    double factor = agent.b_coefs[j];
    for (int m = j; m < k; ++m) {
      sensitivity(m, j) = factor;
      factor *= agent.a_coef;
    }
  }
  Matrix hess = Matrix::Zero(k, k);
  for (int m = 0; m < k; ++m)
    hess += 2.0 * agent.betas[m] * sensitivity.row(m).transpose() *
            sensitivity.row(m);
  return hess;
}

double utility(const AgentType& agent, const Vector& actions,
               const Vector& prices) {
  if (prices.size() != actions.size())
    throw input_error("prices length does not match actions length");
  return valuation(agent, actions) - prices.dot(actions);
}

}  // namespace lqmarket
