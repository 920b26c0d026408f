#include <cmath>
#include <stdexcept>

#include "spe/training.hpp"

namespace spe {

void SphereInitConfig::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere init radius must be positive");
  if (batch < 1 || probe_points < 1) throw std::invalid_argument("sphere init batch sizes must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("sphere init learning rate must be positive");
  if (max_steps < 0 || check_every < 1) throw std::invalid_argument("sphere init step counts invalid");
  if (!(tolerance > 0.0)) throw std::invalid_argument("sphere init tolerance must be positive");
}

namespace {

void uniform_points(std::vector<double>& pts, std::vector<double>& sdf, std::size_t n, int dim,
                    double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto d = static_cast<std::size_t>(dim);
  pts.resize(n * d);
  sdf.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      pts[i * d + j] = u(rng);
      r2 += pts[i * d + j] * pts[i * d + j];
    }
    sdf[i] = std::sqrt(r2) - radius;
  }
}

double mean_abs_error(const FieldModel& model, const std::vector<double>& pts,
                      const std::vector<double>& sdf) {
  const auto eval = evaluate_batch(model, pts, false);
  double sum = 0.0;
  for (std::size_t i = 0; i < sdf.size(); ++i) sum += std::abs(eval.values[i] - sdf[i]);
  return sum / static_cast<double>(sdf.size());
}

}  // namespace

SphereInitResult pretrain_sphere(FieldModel model, const SphereInitConfig& config) {
  config.validate();
  model.validate();
  if (model.output_dim() != 1) throw std::invalid_argument("pretrain_sphere needs a scalar model");
  const int dim = model.input_dim();
  std::mt19937_64 rng(config.seed);
  std::vector<double> probe, probe_sdf, pts, sdf;
  uniform_points(probe, probe_sdf, config.probe_points, dim, config.radius, rng);

  SphereInitResult result;
  std::vector<double> params = model.flatten();
  std::vector<double> grad(params.size());
  OptimState state(params.size());
  result.mean_abs_error = mean_abs_error(model, probe, probe_sdf);
  while (result.mean_abs_error >= config.tolerance && result.steps < config.max_steps) {
    for (int s = 0; s < config.check_every && result.steps < config.max_steps; ++s, ++result.steps) {
      uniform_points(pts, sdf, config.batch, dim, config.radius, rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = l2_loss(model, pts, sdf, grad);
      if (!std::isfinite(loss)) throw TrainingDiverged("sphere pretraining diverged", result.steps);
      adam_step(state, params, grad, config.lr);
      model.unflatten(params);
    }
    result.mean_abs_error = mean_abs_error(model, probe, probe_sdf);
  }
  result.converged = result.mean_abs_error < config.tolerance;
  result.model = std::move(model);
  return result;
}

}  // namespace spe
