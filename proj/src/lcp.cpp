#include "lqmarket/lcp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "lqmarket/tridiagonal.hpp"

namespace lqmarket {

namespace {

// Solve W_SS z_S = -q_S for the selected indices. A principal submatrix of
// a tridiagonal matrix is tridiagonal: adjacent selected indices keep their
// coupling, gaps break it.
Vector solve_on_set(const Vector& diag, const Vector& off, const Vector& q,
                    const std::vector<int>& active) {
  const int m = static_cast<int>(active.size());
  Vector sub(std::max(0, m - 1)), dia(m), sup(std::max(0, m - 1)), rhs(m);
  for (int i = 0; i < m; ++i) {
    dia[i] = diag[active[i]];
    rhs[i] = -q[active[i]];
    if (i + 1 < m) {
      const bool adjacent = active[i + 1] == active[i] + 1;
      sub[i] = adjacent ? off[active[i]] : 0.0;
      sup[i] = adjacent ? off[active[i]] : 0.0;
    }
  }
  return solve_tridiagonal(sub, dia, sup, rhs);
}

Vector full_w(const Vector& diag, const Vector& off, const Vector& q,
              const Vector& z) {
  const int n = static_cast<int>(diag.size());
  Vector w = q;
  for (int i = 0; i < n; ++i) {
    w[i] += diag[i] * z[i];
    if (i > 0) w[i] += off[i - 1] * z[i - 1];
    if (i + 1 < n) w[i] += off[i] * z[i + 1];
  }
  return w;
}

double complementarity_residual(const Vector& z, const Vector& w) {
  double worst = 0.0;
  for (int i = 0; i < z.size(); ++i)
    worst = std::max(worst, std::abs(std::min(z[i], w[i])));
  return worst;
}

}  // namespace

LcpResult solve_tridiagonal_lcp(const Vector& diag, const Vector& off,
                                const Vector& q, double tol, int max_iters) {
  const int n = static_cast<int>(diag.size());
  if (q.size() != n || off.size() != std::max(0, n - 1))
    throw input_error("LCP shapes are inconsistent");
  for (int i = 0; i < n; ++i)
    if (!(diag[i] > 0.0)) throw input_error("LCP matrix must have positive diagonal");

  LcpResult result;
  result.z = Vector::Zero(n);
  result.w = q;
  result.iterations = 0;
  result.converged = false;

  const double pivot_tol = 1e-12;
  std::vector<char> active(n, 0);
  std::set<std::vector<char>> visited;
  bool least_index_mode = false;

  for (int it = 0; it < max_iters; ++it) {
    result.iterations = it + 1;
    std::vector<int> set;
    for (int i = 0; i < n; ++i)
      if (active[i]) set.push_back(i);
    Vector z = Vector::Zero(n);
    if (!set.empty()) {
      const Vector zs = solve_on_set(diag, off, q, set);
      for (size_t j = 0; j < set.size(); ++j) z[set[j]] = zs[j];
    }
    const Vector w = full_w(diag, off, q, z);

    int least_violation = -1;
    std::vector<int> violations;
    for (int i = 0; i < n; ++i) {
      const bool bad = active[i] ? z[i] < -pivot_tol : w[i] < -pivot_tol;
      if (bad) {
        violations.push_back(i);
        if (least_violation < 0) least_violation = i;
      }
    }
    if (violations.empty()) {
      result.z = z.cwiseMax(0.0);
      result.w = full_w(diag, off, q, result.z);
      result.residual = complementarity_residual(result.z, result.w);
      result.converged = true;
      return result;
    }

    if (!least_index_mode) {
      // Newton phase: retake the whole active set from the violation signs.
      for (int i : violations) active[i] = !active[i];
      if (!visited.insert(active).second) least_index_mode = true;  // cycle
    } else {
      // Least-index pivoting terminates for positive definite systems.
      active[least_violation] = !active[least_violation];
    }
  }

  // Projected Gauss-Seidel fallback: per-period exact scalar roots.
  Vector z = result.z;
  double residual = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    for (int i = 0; i < n; ++i) {
      double wi = q[i] + diag[i] * z[i];
      if (i > 0) wi += off[i - 1] * z[i - 1];
      if (i + 1 < n) wi += off[i] * z[i + 1];
      z[i] = std::max(0.0, z[i] - wi / diag[i]);
    }
    const Vector w = full_w(diag, off, q, z);
    residual = complementarity_residual(z, w);
    if (residual <= tol) {
      result.z = z;
      result.w = w;
      result.residual = residual;
      result.converged = true;
      result.iterations += sweep + 1;
      return result;
    }
  }
  throw solver_error("cap complementarity solve did not converge", residual);
}

}  // namespace lqmarket
