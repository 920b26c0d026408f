#pragma once

namespace spe {

// Value and first derivative of a centred uniform B-spline basis.
struct BasisValue {
  double value = 0.0;
  double derivative = 0.0;
};

// Centred B-spline of the given degree (0, 1 or 2): the box function on
// [-1/2, 1/2) and its self-convolutions. Support radius is (degree + 1) / 2.
//
// At the kinks of the linear basis (t = -1, 0, 1) the derivative is the
// left limit. The box function's derivative is 0 everywhere.
// Throws std::invalid_argument for any other degree.
BasisValue bspline_basis(double t, int degree);

// Second derivative, piecewise constant for degree 2 (left limit at the
// breakpoints) and 0 for degrees 0 and 1.
double bspline_second_derivative(double t, int degree);

// Half-width of the basis support: 0.5, 1.0, 1.5.
double bspline_support_radius(int degree);

void check_bspline_degree(int degree);

}  // namespace spe
