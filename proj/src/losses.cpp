#include "spe/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spe {

namespace {

void check_batch(const FieldModel& model, const SdfBatch& batch) {
  const auto d = static_cast<std::size_t>(batch.dim);
  if (batch.dim != model.input_dim() || model.output_dim() != 1) {
    throw std::invalid_argument("sdf_loss: model must map R^" + std::to_string(batch.dim) + " to R");
  }
  if (batch.surface_points.empty() || batch.domain_points.empty()) {
    throw std::invalid_argument("sdf_loss: empty batch");
  }
  if (batch.surface_points.size() % d != 0 || batch.domain_points.size() % d != 0 ||
      batch.surface_normals.size() != batch.surface_points.size()) {
    throw std::invalid_argument("sdf_loss: batch arrays have inconsistent sizes");
  }
}

// Per-point terms and upstreams. Fills the value and upstream spans.
struct SdfTerms {
  const SdfBatch& batch;
  SdfLossWeights w;
  double fit = 0.0, normal = 0.0, eikonal = 0.0;

  void surface(std::size_t i, std::span<const double> value, std::span<const double> g,
               std::span<double> dv, std::span<double> dg) {
    const auto d = static_cast<std::size_t>(batch.dim);
    const double inv_n = 1.0 / static_cast<double>(batch.surface_size());
    const double f = value[0];
    fit += f * f;
    dv[0] = 2.0 * f * inv_n;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = g[j] - batch.surface_normals[i * d + j];
      normal += r * r;
      dg[j] = 2.0 * w.tau * r * inv_n;
    }
  }

  void domain(std::span<const double> g, std::span<double> dg) {
    const double inv_n = 1.0 / static_cast<double>(batch.domain_size());
    double n2 = 0.0;
    for (double v : g) n2 += v * v;
    const double len = std::sqrt(n2);
    const double r = len - 1.0;
    eikonal += r * r;
    if (len == 0.0) return;
    const double scale = 2.0 * w.lambda * r * inv_n / len;
    for (std::size_t j = 0; j < g.size(); ++j) dg[j] = scale * g[j];
  }

  SdfLossValue finish() const {
    SdfLossValue out;
    out.fit = fit / static_cast<double>(batch.surface_size());
    out.normal = normal / static_cast<double>(batch.surface_size());
    out.eikonal = eikonal / static_cast<double>(batch.domain_size());
    out.loss = out.fit + w.tau * out.normal + w.lambda * out.eikonal;
    return out;
  }
};

void check_regression(const FieldModel& model, std::span<const double> points,
                      std::span<const double> targets) {
  const auto d = static_cast<std::size_t>(model.input_dim());
  const auto out = static_cast<std::size_t>(model.output_dim());
  if (points.empty()) throw std::invalid_argument("regression loss: empty batch");
  if (points.size() % d != 0 || targets.size() != points.size() / d * out) {
    throw std::invalid_argument("regression loss: points and targets do not match the model");
  }
}

template <typename PointLoss>
double regression(const FieldModel& model, std::span<const double> points,
                  std::span<const double> targets, std::span<double> grad, PointLoss point_loss) {
  check_regression(model, points, targets);
  const auto out = static_cast<std::size_t>(model.output_dim());
  const double inv = 1.0 / static_cast<double>(targets.size());
  double total = 0.0;
  if (grad.empty()) {
    const auto eval = evaluate_batch(model, points, false);
    double unused = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) total += point_loss(eval.values[i] - targets[i], inv, unused);
    return total * inv;
  }
  accumulate_gradient(
      model, points, false,
      [&](std::size_t i, std::span<const double> value, std::span<const double>,
          std::span<double> dv, std::span<double>) {
        for (std::size_t c = 0; c < out; ++c) total += point_loss(value[c] - targets[i * out + c], inv, dv[c]);
      },
      grad);
  return total * inv;
}

double l1_point(double r, double inv, double& d) {
  d = r > 0.0 ? inv : (r < 0.0 ? -inv : 0.0);
  return std::abs(r);
}

double l2_point(double r, double inv, double& d) {
  d = 2.0 * r * inv;
  return r * r;
}

template <typename PointLoss>
std::pair<double, std::vector<PointUpstream>> regression_upstreams(const FieldModel& model,
                                                                   std::span<const double> points,
                                                                   std::span<const double> targets,
                                                                   PointLoss point_loss) {
  check_regression(model, points, targets);
  const auto d = static_cast<std::size_t>(model.input_dim());
  const auto out = static_cast<std::size_t>(model.output_dim());
  const double inv = 1.0 / static_cast<double>(targets.size());
  const auto eval = evaluate_batch(model, points, false);
  std::vector<PointUpstream> ups(points.size() / d);
  double total = 0.0;
  for (std::size_t i = 0; i < ups.size(); ++i) {
    ups[i].x.assign(points.begin() + static_cast<std::ptrdiff_t>(i * d),
                    points.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    ups[i].d_value.assign(out, 0.0);
    for (std::size_t c = 0; c < out; ++c) {
      total += point_loss(eval.values[i * out + c] - targets[i * out + c], inv, ups[i].d_value[c]);
    }
  }
  return {total * inv, std::move(ups)};
}

}  // namespace

SdfLossValue sdf_loss(const FieldModel& model, const SdfBatch& batch, const SdfLossWeights& weights,
                      std::span<double> grad) {
  check_batch(model, batch);
  SdfTerms terms{batch, weights};
  const auto d = static_cast<std::size_t>(batch.dim);
  if (grad.empty()) {
    const auto surf = evaluate_batch(model, batch.surface_points, true);
    std::vector<double> dv(1), dg(d);
    for (std::size_t i = 0; i < batch.surface_size(); ++i) {
      terms.surface(i, std::span<const double>(surf.values).subspan(i, 1),
                    std::span<const double>(surf.input_grads).subspan(i * d, d), dv, dg);
    }
    const auto dom = evaluate_batch(model, batch.domain_points, true);
    for (std::size_t i = 0; i < batch.domain_size(); ++i) {
      terms.domain(std::span<const double>(dom.input_grads).subspan(i * d, d), dg);
    }
    return terms.finish();
  }
  accumulate_gradient(
      model, batch.surface_points, true,
      [&](std::size_t i, std::span<const double> v, std::span<const double> g, std::span<double> dv,
          std::span<double> dg) { terms.surface(i, v, g, dv, dg); },
      grad);
  accumulate_gradient(
      model, batch.domain_points, true,
      [&](std::size_t, std::span<const double>, std::span<const double> g, std::span<double>,
          std::span<double> dg) { terms.domain(g, dg); },
      grad);
  return terms.finish();
}

std::pair<SdfLossValue, std::vector<PointUpstream>> sdf_loss_upstreams(const FieldModel& model,
                                                                       const SdfBatch& batch,
                                                                       const SdfLossWeights& weights) {
  check_batch(model, batch);
  SdfTerms terms{batch, weights};
  const auto d = static_cast<std::size_t>(batch.dim);
  std::vector<PointUpstream> ups;
  ups.reserve(batch.surface_size() + batch.domain_size());
  auto make = [&](const std::vector<double>& pts, std::size_t i) {
    PointUpstream u;
    u.x.assign(pts.begin() + static_cast<std::ptrdiff_t>(i * d),
               pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    u.d_value.assign(1, 0.0);
    u.d_grad.assign(d, 0.0);
    return u;
  };
  const auto surf = evaluate_batch(model, batch.surface_points, true);
  for (std::size_t i = 0; i < batch.surface_size(); ++i) {
    auto u = make(batch.surface_points, i);
    terms.surface(i, std::span<const double>(surf.values).subspan(i, 1),
                  std::span<const double>(surf.input_grads).subspan(i * d, d), u.d_value, u.d_grad);
    ups.push_back(std::move(u));
  }
  const auto dom = evaluate_batch(model, batch.domain_points, true);
  for (std::size_t i = 0; i < batch.domain_size(); ++i) {
    auto u = make(batch.domain_points, i);
    terms.domain(std::span<const double>(dom.input_grads).subspan(i * d, d), u.d_grad);
    ups.push_back(std::move(u));
  }
  return {terms.finish(), std::move(ups)};
}

double l1_regression_loss(const FieldModel& model, std::span<const double> points,
                          std::span<const double> targets, std::span<double> grad) {
  return regression(model, points, targets, grad, l1_point);
}

double l2_loss(const FieldModel& model, std::span<const double> points,
               std::span<const double> targets, std::span<double> grad) {
  return regression(model, points, targets, grad, l2_point);
}

std::pair<double, std::vector<PointUpstream>> l1_regression_upstreams(
    const FieldModel& model, std::span<const double> points, std::span<const double> targets) {
  return regression_upstreams(model, points, targets, l1_point);
}

std::pair<double, std::vector<PointUpstream>> l2_upstreams(const FieldModel& model,
                                                           std::span<const double> points,
                                                           std::span<const double> targets) {
  return regression_upstreams(model, points, targets, l2_point);
}

}  // namespace spe
