#include "lqmarket/tridiagonal.hpp"

#include <cmath>
#include <vector>

namespace lqmarket {

Vector solve_tridiagonal(const Vector& sub, const Vector& diag,
                         const Vector& super, const Vector& rhs) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) return Vector();
  if (rhs.size() != n || sub.size() != std::max(0, n - 1) ||
      super.size() != std::max(0, n - 1))
    throw input_error("tridiagonal system shapes are inconsistent");

  std::vector<double> c(n, 0.0), d(n, 0.0);
  double pivot = diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot))
    throw solver_error("tridiagonal pivot vanished", 0.0);
  if (n > 1) c[0] = super[0] / pivot;
  d[0] = rhs[0] / pivot;
  for (int i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i - 1] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot))
      throw solver_error("tridiagonal pivot vanished", 0.0);
    if (i < n - 1) c[i] = super[i] / pivot;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
  }
  Vector x(n);
  x[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace lqmarket
