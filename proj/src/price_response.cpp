#include "lqmarket/price_response.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

namespace lqmarket {

namespace {

// Coefficient assembly in extended precision. The downstream first-order
// checks sit close to the double rounding floor for strongly amplifying
// agents (a_coef near 2, long horizons), so the core keeps the extra bits
// and rounds once at the boundary.
struct CoefficientCore {
  std::vector<long double> diag, sub, super, affine;
};

CoefficientCore coefficient_core(const AgentType& agent, Theta1Variant variant) {
  const int k = agent.horizon();
  const long double a = agent.a_coef;
  auto b = [&](int i) { return static_cast<long double>(agent.b_coefs[i]); };
  auto beta = [&](int i) { return static_cast<long double>(agent.betas[i]); };
  auto target = [&](int i) {
    return i < 0 ? static_cast<long double>(agent.x0)
                 : static_cast<long double>(agent.targets[i]);
  };

  CoefficientCore core;
  core.diag.resize(k);
  core.affine.resize(k);
  core.sub.resize(k > 1 ? k - 1 : 0);
  core.super.resize(k > 1 ? k - 1 : 0);
  for (int i = 0; i < k; ++i) {
    const long double own = 1.0L / (2.0L * beta(i) * b(i) * b(i));
    if (i == 0) {
      core.diag[0] = variant == Theta1Variant::Paper ? a * own : own;
    } else {
      core.diag[i] = own + a * a / (2.0L * beta(i - 1) * b(i) * b(i));
    }
    core.affine[i] = (target(i) - a * target(i - 1)) / b(i);
    if (i >= 1) core.sub[i - 1] = -a / (2.0L * beta(i - 1) * b(i - 1) * b(i));
    if (i + 1 < k) core.super[i] = -a / (2.0L * beta(i) * b(i) * b(i + 1));
  }
  return core;
}

}  // namespace

ResponseCoefficients coefficients(const AgentType& agent, Theta1Variant variant) {
  agent.validate();
  const CoefficientCore core = coefficient_core(agent, variant);
  const int k = agent.horizon();
  ResponseCoefficients out;
  out.diag.resize(k);
  out.affine.resize(k);
  out.sub.resize(k > 1 ? k - 1 : 0);
  out.super.resize(k > 1 ? k - 1 : 0);
  for (int i = 0; i < k; ++i) {
    out.diag[i] = static_cast<double>(core.diag[i]);
    out.affine[i] = static_cast<double>(core.affine[i]);
  }
  for (int i = 0; i + 1 < k; ++i) {
    out.sub[i] = static_cast<double>(core.sub[i]);
    out.super[i] = static_cast<double>(core.super[i]);
  }
  for (int i = 0; i < k; ++i) {
    if (!(out.diag[i] < 0.0))
      throw input_error("response coefficients lost negativity; agent invalid");
  }
  return out;
}

Vector respond(const AgentType& agent, const Vector& prices,
               Theta1Variant variant) {
  agent.validate();
  const int k = agent.horizon();
  if (prices.size() != k)
    throw input_error("prices length does not match agent horizon");
  if (!prices.allFinite()) throw input_error("prices must be finite");
  const CoefficientCore core = coefficient_core(agent, variant);
  Vector actions(k);
  for (int i = 0; i < k; ++i) {
    long double v = core.diag[i] * static_cast<long double>(prices[i]) +
                    core.affine[i];
    if (i >= 1) v += core.sub[i - 1] * static_cast<long double>(prices[i - 1]);
    if (i + 1 < k) v += core.super[i] * static_cast<long double>(prices[i + 1]);
    actions[i] = static_cast<double>(v);
  }
  return actions;
}

Matrix response_jacobian(const AgentType& agent, Theta1Variant variant) {
  const ResponseCoefficients c = coefficients(agent, variant);
  const int k = c.horizon();
  Matrix jac = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    jac(i, i) = c.diag[i];
    if (i >= 1) jac(i, i - 1) = c.sub[i - 1];
    if (i + 1 < k) jac(i, i + 1) = c.super[i];
  }
  return jac;
}

namespace {

Vector clamp_to(const Vector& v, const std::optional<ActionBounds>& bounds) {
  if (!bounds) return v;
  return v.cwiseMax(bounds->lo).cwiseMin(bounds->hi);
}

}  // namespace

Vector respond_oracle(const AgentType& agent, const Vector& prices,
                      const std::optional<ActionBounds>& bounds,
                      const OracleOptions& options) {
  agent.validate();
  const int k = agent.horizon();
  if (prices.size() != k)
    throw input_error("prices length does not match agent horizon");
  if (bounds && (bounds->lo.size() != k || bounds->hi.size() != k))
    throw input_error("action bounds length does not match agent horizon");

  // Stationarity system from the raw dynamics: hess * a = prices - grad(0).
  const Matrix hess = valuation_hessian(agent);
  const Vector grad0 = valuation_gradient(agent, Vector::Zero(k));
  const Matrix neg_hess = -hess;
  Vector start = neg_hess.ldlt().solve(grad0 - prices);
  // One refinement pass keeps the start near the representable optimum even
  // when the Hessian is badly conditioned.
  for (int pass = 0; pass < 2; ++pass) {
    const Vector resid = valuation_gradient(agent, start) - prices;
    start += neg_hess.ldlt().solve(-resid);
  }
  Vector current = clamp_to(start, bounds);

  Eigen::SelfAdjointEigenSolver<Matrix> eigs(neg_hess);
  const double curvature = eigs.eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(curvature, 1e-12);

  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= options.max_iters; ++it) {
    const Vector grad = valuation_gradient(agent, current) - prices;
    const Vector next = clamp_to(current + step * grad, bounds);
    residual = ((current - next) / step).lpNorm<Eigen::Infinity>();
    if (residual <= options.grad_tol) return next;
    current = next;
  }
  throw solver_error("price-response oracle did not reach its tolerance",
                     residual);
}

Matrix response_report_jacobian(const AgentType& agent, const Vector& prices,
                                Theta1Variant variant) {
  agent.validate();
  const int k = agent.horizon();
  if (prices.size() != k)
    throw input_error("prices length does not match agent horizon");
  const ResponseCoefficients c = coefficients(agent, variant);
  const double a = agent.a_coef;
  const Vector& b = agent.b_coefs;
  const Vector& beta = agent.betas;
  auto target = [&](int i) { return i < 0 ? agent.x0 : agent.targets[i]; };
  auto price = [&](int i) { return (i >= 0 && i < k) ? prices[i] : 0.0; };

  Matrix jac = Matrix::Zero(k, 3 * k + 1);

  // Column 0: a_coef.
  {
    Vector col = Vector::Zero(k);
    if (variant == Theta1Variant::Paper)
      col[0] += (1.0 / (2.0 * beta[0] * b[0] * b[0])) * price(0);
    for (int i = 1; i < k; ++i)
      col[i] += (a / (beta[i - 1] * b[i] * b[i])) * price(i);
    for (int i = 1; i < k; ++i)
      col[i] += (-1.0 / (2.0 * beta[i - 1] * b[i - 1] * b[i])) * price(i - 1);
    for (int i = 0; i + 1 < k; ++i)
      col[i] += (-1.0 / (2.0 * beta[i] * b[i] * b[i + 1])) * price(i + 1);
    for (int i = 0; i < k; ++i) col[i] += -target(i - 1) / b[i];
    jac.col(0) = col;
  }

  // Columns 1..K: b_coefs[j]. Every coefficient containing b_j scales like
  // 1/b_j, so its derivative is -coef/b_j.
  for (int j = 0; j < k; ++j) {
    Vector col = Vector::Zero(k);
    col[j] += (-2.0 * c.diag[j] / b[j]) * price(j);
    col[j] += -c.affine[j] / b[j];
    if (j >= 1) {
      col[j] += (-c.sub[j - 1] / b[j]) * price(j - 1);       // own row, b_j
      col[j - 1] += (-c.super[j - 1] / b[j]) * price(j);     // row j-1 couples p_j
    }
    if (j + 1 < k) {
      col[j] += (-c.super[j] / b[j]) * price(j + 1);
      col[j + 1] += (-c.sub[j] / b[j]) * price(j);
    }
    jac.col(1 + j) = col;
  }

  // Columns K+1..2K: betas[j]; the beta_j-dependent pieces scale like 1/beta_j.
  for (int j = 0; j < k; ++j) {
    Vector col = Vector::Zero(k);
    double own = 1.0 / (2.0 * beta[j] * b[j] * b[j]);
    if (j == 0 && variant == Theta1Variant::Paper) own *= a;
    col[j] += (-own / beta[j]) * price(j);
    if (j + 1 < k) {
      const double cross = a * a / (2.0 * beta[j] * b[j + 1] * b[j + 1]);
      col[j + 1] += (-cross / beta[j]) * price(j + 1);
      col[j + 1] += (-c.sub[j] / beta[j]) * price(j);
      col[j] += (-c.super[j] / beta[j]) * price(j + 1);
    }
    jac.col(1 + k + j) = col;
  }

  // Columns 2K+1..3K: targets[j]; only the affine offsets move.
  for (int j = 0; j < k; ++j) {
    Vector col = Vector::Zero(k);
    col[j] += 1.0 / b[j];
    if (j + 1 < k) col[j + 1] += -a / b[j + 1];
    jac.col(1 + 2 * k + j) = col;
  }

  return jac;
}

Vector aggregate_demand(const BidProfile& bids, const Vector& prices,
                        Theta1Variant variant) {
  if (bids.reports.empty())
    throw input_error("aggregate demand needs at least one report");
  Vector total = Vector::Zero(prices.size());
  for (const AgentType& report : bids.reports)
    total += respond(report, prices, variant);
  return total;
}

Vector flatten_report(const AgentType& agent) {
  const int k = agent.horizon();
  Vector coords(3 * k + 1);
  coords[0] = agent.a_coef;
  coords.segment(1, k) = agent.b_coefs;
  coords.segment(1 + k, k) = agent.betas;
  coords.segment(1 + 2 * k, k) = agent.targets;
  return coords;
}

AgentType unflatten_report(const Vector& coords, double x0) {
  const int size = static_cast<int>(coords.size());
  if (size < 4 || (size - 1) % 3 != 0)
    throw input_error("flattened report must have length 3K+1");
  const int k = (size - 1) / 3;
  AgentType agent;
  agent.a_coef = coords[0];
  agent.b_coefs = coords.segment(1, k);
  agent.betas = coords.segment(1 + k, k);
  agent.targets = coords.segment(1 + 2 * k, k);
  agent.x0 = x0;
  return agent;
}

}  // namespace lqmarket
