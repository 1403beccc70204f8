#pragma once

#include "lqmarket/model.hpp"

namespace lqmarket {

/// Thomas algorithm for A x = rhs with A tridiagonal (sub/diag/super).
/// No pivoting; intended for the symmetric positive definite systems that
/// arise from aggregate demand. Throws solver_error on a vanishing pivot.
Vector solve_tridiagonal(const Vector& sub, const Vector& diag,
                         const Vector& super, const Vector& rhs);

}  // namespace lqmarket
