#pragma once

#include "lqmarket/model.hpp"

namespace lqmarket {

struct LcpResult {
  Vector z;           // the multiplier vector, >= 0
  Vector w;           // q + W z, >= 0
  double residual;    // max_i |min(z_i, w_i)|
  int iterations;
  bool converged;
};

/// Solves w = q + W z, z >= 0, w >= 0, z'w = 0 for W symmetric positive
/// definite tridiagonal (diag > 0, off = sub/super diagonal). Active-set
/// pivoting (least-index safeguard against cycling) with exact tridiagonal
/// inner solves; falls back to projected Gauss-Seidel sweeps, where each
/// period's multiplier is driven to its exact scalar root, if the pivot
/// iteration hits its cap. Deterministic. Throws solver_error if neither
/// phase reaches the tolerance.
LcpResult solve_tridiagonal_lcp(const Vector& diag, const Vector& off,
                                const Vector& q, double tol = 1e-10,
                                int max_iters = 10000);

}  // namespace lqmarket
