#pragma once

#include <span>
#include <utility>
#include <vector>

#include "spe/network.hpp"

namespace spe {

// Surface samples with normals plus free-space samples, all N x dim row-major.
struct SdfBatch {
  int dim = 3;
  std::vector<double> surface_points;
  std::vector<double> surface_normals;
  std::vector<double> domain_points;

  std::size_t surface_size() const { return surface_points.size() / static_cast<std::size_t>(dim); }
  std::size_t domain_size() const { return domain_points.size() / static_cast<std::size_t>(dim); }
};

struct SdfLossWeights {
  double lambda = 0.1;  // Eikonal term
  double tau = 1.0;     // normal alignment term
};

// loss = fit + tau * normal + lambda * eikonal, where
//   fit     = mean_surface F(x)^2
//   normal  = mean_surface |grad F(x) - n|^2
//   eikonal = mean_domain (|grad F(x)| - 1)^2
struct SdfLossValue {
  double loss = 0.0;
  double fit = 0.0;
  double normal = 0.0;
  double eikonal = 0.0;
};

// When grad is non-empty the parameter gradient is added into it.
// Throws std::invalid_argument on an empty or malformed batch.
SdfLossValue sdf_loss(const FieldModel& model, const SdfBatch& batch, const SdfLossWeights& weights,
                      std::span<double> grad = {});

// Same loss with the per-point upstream derivatives spelled out, in the
// order surface points then domain points, for use with backward().
std::pair<SdfLossValue, std::vector<PointUpstream>> sdf_loss_upstreams(const FieldModel& model,
                                                                       const SdfBatch& batch,
                                                                       const SdfLossWeights& weights);

// mean |F(x) - target|; the subgradient at an exact tie is 0.
// points is N x d, targets N x out.
double l1_regression_loss(const FieldModel& model, std::span<const double> points,
                          std::span<const double> targets, std::span<double> grad = {});

// mean over points and channels of (F(x) - target)^2.
double l2_loss(const FieldModel& model, std::span<const double> points,
               std::span<const double> targets, std::span<double> grad = {});

std::pair<double, std::vector<PointUpstream>> l1_regression_upstreams(
    const FieldModel& model, std::span<const double> points, std::span<const double> targets);
std::pair<double, std::vector<PointUpstream>> l2_upstreams(const FieldModel& model,
                                                           std::span<const double> points,
                                                           std::span<const double> targets);

}  // namespace spe
