#pragma once

#include <stdexcept>
#include <string>

namespace lqmarket {

/// Bad shapes, out-of-range values, reports outside the message space.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration input.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance; carries the final
/// residual so callers can report how far off it was.
class solver_error : public std::runtime_error {
 public:
  solver_error(const std::string& what, double residual)
      : std::runtime_error(what + " (residual=" + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace lqmarket
