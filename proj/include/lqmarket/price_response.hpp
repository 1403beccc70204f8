#pragma once

#include <optional>

#include "lqmarket/model.hpp"

namespace lqmarket {

/// Coefficients of the affine price response a = T p + affine, where T is
/// the symmetric tridiagonal matrix with the given diagonals.
struct ResponseCoefficients {
  Vector diag;    // length K, own-price slopes, all < 0
  Vector sub;     // length K-1, sub[j] couples action j+1 to price j
  Vector super;   // length K-1, super[j] couples action j to price j+1
  Vector affine;  // length K, price-independent offset

  int horizon() const { return static_cast<int>(diag.size()); }
};

ResponseCoefficients coefficients(const AgentType& agent,
                                  Theta1Variant variant = Theta1Variant::Foc);

/// Utility-maximizing actions of a price-taking agent (closed form).
Vector respond(const AgentType& agent, const Vector& prices,
               Theta1Variant variant = Theta1Variant::Foc);

struct ActionBounds {
  Vector lo;  // length K
  Vector hi;  // length K
};

struct OracleOptions {
  double grad_tol = 1e-10;
  int max_iters = 100000;
};

/// Independent numeric route to the price response: solves the first-order
/// system by dense factorization of the valuation Hessian, then runs
/// projected gradient ascent (step from the curvature bound) until the
/// projected-gradient residual drops below grad_tol. Never touches the
/// tridiagonal closed form. Throws solver_error on non-convergence.
Vector respond_oracle(const AgentType& agent, const Vector& prices,
                      const std::optional<ActionBounds>& bounds = std::nullopt,
                      const OracleOptions& options = {});

/// d(respond)/d(prices) as a dense K x K matrix (tridiagonal, symmetric,
/// negative definite).
Matrix response_jacobian(const AgentType& agent,
                         Theta1Variant variant = Theta1Variant::Foc);

/// d(respond)/d(report) at fixed prices, K x (3K+1). Report coordinates are
/// ordered a_coef, b_coefs, betas, targets; x0 is not part of the report.
Matrix response_report_jacobian(const AgentType& agent, const Vector& prices,
                                Theta1Variant variant = Theta1Variant::Foc);

/// Per-period sum of price responses across all reports.
Vector aggregate_demand(const BidProfile& bids, const Vector& prices,
                        Theta1Variant variant = Theta1Variant::Foc);

/// Flattens the report coordinates (a_coef, b, beta, d); length 3K+1.
Vector flatten_report(const AgentType& agent);

/// Inverse of flatten_report; x0 is supplied separately (it is public).
AgentType unflatten_report(const Vector& coords, double x0);

}  // namespace lqmarket
