#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace phaseiso {

/// Numeric tolerances shared by every module. One record, passed by value.
struct Tolerances {
  /// Relative tolerance for norm and functional comparisons.
  double rel = 1e-9;
  /// Agreement threshold for finite-difference estimates.
  double finite_difference = 1e-6;
  /// Coordinates with |x_i| <= zero * max|x| count as structural zeros.
  double zero = 1e-12;
  /// Collinearity residual (sine of angle) accepted by projective recovery.
  double collinearity = 1e-8;
  /// Accepted defect in |x*(x)| = |phi(f(x))|, scaled by (1 + ||x||).
  double recovery = 1e-8;

  /// Absolute slack for comparing two quantities of the given magnitude.
  double slack(double magnitude) const { return rel * (1.0 + magnitude); }
};

/// Defaults, with PHASE_TOL overriding the relative tolerance when set.
inline Tolerances default_tolerances() {
  Tolerances tol;
  if (const char* env = std::getenv("PHASE_TOL"); env != nullptr && *env != '\0') {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || !(value > 0.0))
      throw std::invalid_argument(std::string("PHASE_TOL is not a positive number: ") + env);
    tol.rel = value;
  }
  return tol;
}

}  // namespace phaseiso
