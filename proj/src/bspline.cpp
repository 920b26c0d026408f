#include "spe/bspline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spe {

void check_bspline_degree(int degree) {
  if (degree < 0 || degree > 2) {
    throw std::invalid_argument("unsupported B-spline degree " + std::to_string(degree) +
                                " (expected 0, 1 or 2)");
  }
}

double bspline_support_radius(int degree) {
  check_bspline_degree(degree);
  return 0.5 * (degree + 1);
}

BasisValue bspline_basis(double t, int degree) {
  check_bspline_degree(degree);
  const double a = std::abs(t);
  switch (degree) {
    case 0:
      // Half-open [-1/2, 1/2) so integer translates tile the line.
      return {t >= -0.5 && t < 0.5 ? 1.0 : 0.0, 0.0};
    case 1: {
      if (a >= 1.0) {
        // t == 1 sits on the descending edge, whose left limit is -1.
        return {0.0, t == 1.0 ? -1.0 : 0.0};
      }
      // Left-limit slope: +1 on (-1, 0], -1 on (0, 1).
      return {1.0 - a, t <= 0.0 ? 1.0 : -1.0};
    }
    default: {
      if (a <= 0.5) return {0.75 - t * t, -2.0 * t};
      if (a < 1.5) {
        const double r = 1.5 - a;
        return {0.5 * r * r, t < 0.0 ? r : -r};
      }
      return {0.0, 0.0};
    }
  }
}

double bspline_second_derivative(double t, int degree) {
  check_bspline_degree(degree);
  if (degree < 2) return 0.0;
  // Left-limit convention at the breakpoints -1.5, -0.5, 0.5, 1.5.
  if (t <= -1.5 || t > 1.5) return 0.0;
  if (t <= -0.5) return 1.0;
  if (t <= 0.5) return -2.0;
  return 1.0;
}

}  // namespace spe
