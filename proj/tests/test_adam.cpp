#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>

#include "spe/adam.hpp"

using namespace spe;

TEST_CASE("two-step trace on a scalar against hand-expanded moments") {
  OptimState state(1);
  std::vector<double> p{1.0};
  adam_step(state, p, std::vector<double>{2.0}, 0.1);
  // m = 0.2, v = 0.004; bias-corrected 2 and 4.
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));
  adam_step(state, p, std::vector<double>{-1.0}, 0.1);
  const double m = 0.9 * 0.2 - 0.1;
  const double v = 0.999 * 0.004 + 0.001;
  const double mhat = m / (1 - 0.81);
  const double vhat = v / (1 - 0.999 * 0.999);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8) - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-14));
  CHECK(state.step == 2);
}

TEST_CASE("first step moves every parameter by about lr regardless of gradient scale") {
  OptimState state(4);
  std::vector<double> p(4, 0.0);
  adam_step(state, p, std::vector<double>{1e-3, -5.0, 1e4, 0.0}, 0.01);
  CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-8));
  CHECK(p[2] == doctest::Approx(-0.01).epsilon(1e-8));
  CHECK(p[3] == 0.0);
}

TEST_CASE("minimizes a separable quadratic") {
  OptimState state(3);
  std::vector<double> p{5.0, -4.0, 0.5}, g(3);
  const double target[3] = {1.0, 2.0, -3.0};
  for (int it = 0; it < 5000; ++it) {
    for (int i = 0; i < 3; ++i) g[i] = 2.0 * (p[i] - target[i]);
    adam_step(state, p, g, 0.05);
  }
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(target[i]).epsilon(1e-3));
}

TEST_CASE("reset clears moments and the step counter") {
  OptimState state(2);
  std::vector<double> p{0.0, 0.0};
  adam_step(state, p, std::vector<double>{1.0, 1.0}, 0.1);
  state.reset(3);
  CHECK(state.step == 0);
  CHECK(state.m == std::vector<double>(3, 0.0));
  CHECK(state.v == std::vector<double>(3, 0.0));
}

TEST_CASE("size mismatches and bad hyper-parameters are rejected") {
  OptimState state(2);
  std::vector<double> p{0.0, 0.0};
  CHECK_THROWS_AS(adam_step(state, p, std::vector<double>{1.0}, 0.1), std::invalid_argument);
  AdamConfig c;
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
