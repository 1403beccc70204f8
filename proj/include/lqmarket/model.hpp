#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lqmarket/errors.hpp"

namespace lqmarket {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One agent's private linear-quadratic parameters.
///
/// Dynamics:   x_{k+1} = a_coef * x_k + b_coefs[k] * a_k,   x_1 = x0.
/// Valuation:  sum_k betas[k] * (x_{k+1} - targets[k])^2  (post-action state).
struct AgentType {
  double a_coef = 1.0;  // state carryover, > 0
  Vector b_coefs;       // control gains, all < 0
  Vector betas;         // tracking weights, all < 0
  Vector targets;       // desired states
  double x0 = 0.0;      // initial state

  int horizon() const { return static_cast<int>(b_coefs.size()); }

  /// Throws input_error on sign or shape violations.
  void validate() const;
};

/// Box bounds on each AgentType field family. Doubles as the message space
/// of the direct mechanism: a report is admissible iff it lies in the box.
struct TypeBounds {
  double a_lo = 0.5, a_hi = 2.0;
  double b_lo = -2.0, b_hi = -0.5;
  double beta_lo = -2.0, beta_hi = -0.1;
  double d_lo = -1.0, d_hi = 1.0;
  double x0_lo = -1.0, x0_hi = 1.0;

  void validate() const;
  bool contains(const AgentType& t, double tol = 0.0) const;
};

/// Selects the first-period own-price coefficient formula. Foc is the
/// default; Paper multiplies it by a_coef for comparison runs (see README).
enum class Theta1Variant { Foc, Paper };

struct MarketConfig {
  int horizon = 1;     // K
  int population = 1;  // N
  Vector caps;         // per-period aggregate caps D_k
  Vector wholesale;    // per-period wholesale prices p^w_k
  TypeBounds type_bounds;
  Theta1Variant theta1 = Theta1Variant::Foc;

  /// Dimension of a flattened type report: a_coef + b + beta + d.
  int bid_dim() const { return 3 * horizon + 1; }

  void validate() const;
};

/// Per-agent actions and the state trajectories they induce.
struct Allocation {
  Matrix actions;  // N x K
  Matrix states;   // N x (K+1), states(i,0) = x0 of agent i

  int agents() const { return static_cast<int>(actions.rows()); }
  int horizon() const { return static_cast<int>(actions.cols()); }
};

/// The profile of (possibly misreported) types submitted to the mechanism.
struct BidProfile {
  std::vector<AgentType> reports;

  int size() const { return static_cast<int>(reports.size()); }
  int horizon() const { return reports.empty() ? 0 : reports.front().horizon(); }

  /// Shape/sign checks plus message-space membership; names the offending
  /// agent in the error message.
  void validate(const MarketConfig& config) const;
};

/// Applies the state recursion; returns (x_1, ..., x_{K+1}).
Vector simulate_trajectory(const AgentType& agent, const Vector& actions);

/// sum_k betas[k] * (x_{k+1} - targets[k])^2 along the induced trajectory.
double valuation(const AgentType& agent, const Vector& actions);

/// Gradient of valuation() with respect to the action vector.
Vector valuation_gradient(const AgentType& agent, const Vector& actions);

/// Constant Hessian of valuation() in action space (dense, negative definite).
Matrix valuation_hessian(const AgentType& agent);

/// valuation minus the payment sum_k prices[k] * actions[k].
double utility(const AgentType& agent, const Vector& actions, const Vector& prices);

}  // namespace lqmarket
