#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>

#include "spe/losses.hpp"
#include "test_util.hpp"

using namespace spe;
using namespace spe::test;

namespace {

SdfBatch random_batch(std::size_t ns, std::size_t nd, std::mt19937_64& rng) {
  SdfBatch b;
  b.surface_points = uniform_points(ns, 3, rng, 0.7);
  b.domain_points = uniform_points(nd, 3, rng, 0.95);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < ns; ++i) {
    double n[3], len = 0.0;
    for (double& v : n) {
      v = normal(rng);
      len += v * v;
    }
    for (double v : n) b.surface_normals.push_back(v / std::sqrt(len));
  }
  return b;
}

// The loss assembled point by point from forward_with_input_grad.
SdfLossValue reference_loss(const FieldModel& model, const SdfBatch& b, const SdfLossWeights& w) {
  SdfLossValue v;
  for (std::size_t i = 0; i < b.surface_size(); ++i) {
    std::span<const double> x(b.surface_points.data() + 3 * i, 3);
    const auto vg = forward_with_input_grad(model, x);
    v.fit += vg.value * vg.value;
    for (int j = 0; j < 3; ++j) {
      const double r = vg.grad[j] - b.surface_normals[3 * i + j];
      v.normal += r * r;
    }
  }
  for (std::size_t i = 0; i < b.domain_size(); ++i) {
    std::span<const double> x(b.domain_points.data() + 3 * i, 3);
    const auto vg = forward_with_input_grad(model, x);
    const double len = std::sqrt(vg.grad[0] * vg.grad[0] + vg.grad[1] * vg.grad[1] + vg.grad[2] * vg.grad[2]);
    v.eikonal += (len - 1.0) * (len - 1.0);
  }
  v.fit /= static_cast<double>(b.surface_size());
  v.normal /= static_cast<double>(b.surface_size());
  v.eikonal /= static_cast<double>(b.domain_size());
  v.loss = v.fit + w.tau * v.normal + w.lambda * v.eikonal;
  return v;
}

template <typename LossFn>
void check_gradient(FieldModel model, LossFn loss_of, const std::vector<double>& grad, double tol) {
  const auto flat = model.flatten();
  const auto mask = model.trainable_mask();
  const double h = 1e-6;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (mask[i] == 0.0) {
      CHECK(grad[i] == 0.0);
      continue;
    }
    auto p = flat, m = flat;
    p[i] += h;
    m[i] -= h;
    model.unflatten(p);
    const double lp = loss_of(model);
    model.unflatten(m);
    const double lm = loss_of(model);
    const double fd = (lp - lm) / (2 * h);
    CHECK(relative_error(grad[i], fd) < tol);
  }
}

}  // namespace

TEST_CASE("sdf loss terms match the pointwise definition") {
  std::mt19937_64 rng(1);
  const SdfLossWeights w{0.3, 2.0};
  for (auto kind : {EncoderKind::spline, EncoderKind::fourier, EncoderKind::identity}) {
    const auto model = make_field_model(tiny_config(kind), 2);
    const auto batch = random_batch(37, 150, rng);
    const auto got = sdf_loss(model, batch, w);
    const auto expect = reference_loss(model, batch, w);
    CHECK(got.fit == doctest::Approx(expect.fit).epsilon(1e-12));
    CHECK(got.normal == doctest::Approx(expect.normal).epsilon(1e-12));
    CHECK(got.eikonal == doctest::Approx(expect.eikonal).epsilon(1e-12));
    CHECK(got.loss == doctest::Approx(expect.loss).epsilon(1e-12));
  }
}

TEST_CASE("sdf loss gradient matches finite differences over every parameter") {
  std::mt19937_64 rng(2);
  const SdfLossWeights w{0.1, 1.0};
  struct Case {
    EncoderKind kind;
    int degree;
    bool frozen;
  };
  for (const Case c : {Case{EncoderKind::spline, 1, false}, Case{EncoderKind::spline, 2, false},
                       Case{EncoderKind::spline, 2, true}, Case{EncoderKind::fourier, 1, false},
                       Case{EncoderKind::identity, 1, false}}) {
    auto cfg = tiny_config(c.kind, c.degree);
    cfg.spline.freeze_directions = c.frozen;
    const auto model = make_field_model(cfg, 4);
    const auto batch = random_batch(6, 8, rng);
    std::vector<double> grad(model.param_count(), 0.0);
    const auto value = sdf_loss(model, batch, w, grad);
    CHECK(value.loss == doctest::Approx(sdf_loss(model, batch, w).loss).epsilon(1e-14));
    check_gradient(model, [&](const FieldModel& m) { return sdf_loss(m, batch, w).loss; }, grad, 1e-4);
  }
}

TEST_CASE("upstream form and fused form agree") {
  std::mt19937_64 rng(3);
  const auto model = make_field_model(tiny_config(EncoderKind::spline, 2), 6);
  const auto batch = random_batch(10, 12, rng);
  std::vector<double> fused(model.param_count(), 0.0);
  sdf_loss(model, batch, {}, fused);
  const auto [value, ups] = sdf_loss_upstreams(model, batch, {});
  CHECK(ups.size() == 22);
  const auto split = backward(model, ups);
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(split[i] == doctest::Approx(fused[i]).epsilon(1e-10));
}

TEST_CASE("a vanishing gradient contributes zero eikonal gradient") {
  auto cfg = tiny_config(EncoderKind::identity);
  auto model = make_field_model(cfg, 1);
  auto flat = model.flatten();
  std::fill(flat.begin(), flat.end(), 0.0);
  model.unflatten(flat);
  SdfBatch b;
  b.surface_points = {0.1, 0.2, 0.3};
  b.surface_normals = {0.0, 0.0, 1.0};
  b.domain_points = {0.5, 0.5, 0.5};
  std::vector<double> grad(model.param_count(), 0.0);
  const auto v = sdf_loss(model, b, {1.0, 0.0}, grad);
  CHECK(v.eikonal == 1.0);
  for (double g : grad) CHECK(std::isfinite(g));
}

TEST_CASE("regression losses and their gradients") {
  std::mt19937_64 rng(5);
  auto cfg = tiny_config(EncoderKind::spline, 2);
  cfg.output_dim = 2;
  const auto model = make_field_model(cfg, 7);
  const auto pts = uniform_points(9, 3, rng);
  std::vector<double> targets(18);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& t : targets) t = u(rng);
  const auto pred = evaluate_batch(model, pts, false).values;
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < 18; ++i) {
    l1 += std::abs(pred[i] - targets[i]);
    l2 += (pred[i] - targets[i]) * (pred[i] - targets[i]);
  }
  CHECK(l2_loss(model, pts, targets) == doctest::Approx(l2 / 18).epsilon(1e-13));
  std::vector<double> g2(model.param_count(), 0.0);
  l2_loss(model, pts, targets, g2);
  check_gradient(model, [&](const FieldModel& m) { return l2_loss(m, pts, targets); }, g2, 1e-5);

  // L1 averages over points; the scalar-output form is what regress-sdf uses.
  auto scfg = tiny_config(EncoderKind::spline, 2);
  const auto smodel = make_field_model(scfg, 8);
  std::vector<double> st(9);
  for (auto& t : st) t = u(rng);
  const auto sp = evaluate_batch(smodel, pts, false).values;
  double sl1 = 0.0;
  for (std::size_t i = 0; i < 9; ++i) sl1 += std::abs(sp[i] - st[i]);
  CHECK(l1_regression_loss(smodel, pts, st) == doctest::Approx(sl1 / 9).epsilon(1e-13));
  std::vector<double> g1(smodel.param_count(), 0.0);
  l1_regression_loss(smodel, pts, st, g1);
  check_gradient(smodel, [&](const FieldModel& m) { return l1_regression_loss(m, pts, st); }, g1, 1e-5);

  // Exact ties contribute nothing.
  std::vector<double> g0(smodel.param_count(), 0.0);
  CHECK(l1_regression_loss(smodel, pts, sp, g0) == 0.0);
  for (double g : g0) CHECK(g == 0.0);
}

TEST_CASE("malformed batches are rejected") {
  const auto model = make_field_model(tiny_config(EncoderKind::identity), 1);
  SdfBatch empty;
  CHECK_THROWS_AS(sdf_loss(model, empty, {}), std::invalid_argument);
  SdfBatch bad;
  bad.surface_points = {0, 0, 0};
  bad.surface_normals = {0, 0};
  bad.domain_points = {0, 0, 0};
  CHECK_THROWS_AS(sdf_loss(model, bad, {}), std::invalid_argument);
  CHECK_THROWS_AS(l2_loss(model, std::vector<double>{0, 0, 0}, std::vector<double>{1, 2}),
                  std::invalid_argument);
}
