#include "spe/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spe {

SdfBatch sample_batches(const PointCloud& cloud, double lower, double upper, std::size_t n,
                        std::mt19937_64& rng) {
  if (cloud.size() == 0) throw std::invalid_argument("sample_batches: empty point cloud");
  if (!cloud.has_normals()) throw std::invalid_argument("sample_batches: point cloud has no normals");
  if (n == 0) throw std::invalid_argument("sample_batches: batch size must be >= 1");
  if (!(lower < upper)) throw std::invalid_argument("sample_batches: empty box");
  const auto d = static_cast<std::size_t>(cloud.dim);
  SdfBatch batch;
  batch.dim = cloud.dim;
  batch.surface_points.resize(n * d);
  batch.surface_normals.resize(n * d);
  batch.domain_points.resize(n * d);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = pick(rng);
    for (std::size_t j = 0; j < d; ++j) {
      batch.surface_points[i * d + j] = cloud.positions[idx * d + j];
      batch.surface_normals[i * d + j] = cloud.normals[idx * d + j];
    }
  }
  std::uniform_real_distribution<double> box(lower, upper);
  for (auto& v : batch.domain_points) v = box(rng);
  return batch;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !(tau >= 0.0)) throw std::invalid_argument("lambda and tau must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_points < 1) throw std::invalid_argument("batch size must be >= 1");
  if (probe_points < 1) throw std::invalid_argument("probe size must be >= 1");
  if (k_schedule.empty()) throw std::invalid_argument("K schedule must not be empty");
  for (std::size_t s = 0; s < k_schedule.size(); ++s) {
    if (k_schedule[s] < 1) throw std::invalid_argument("K schedule entries must be >= 1");
    if (s == 0) continue;
    const int prev = k_schedule[s - 1], next = k_schedule[s];
    if (next <= prev || next % prev != 0 || ((next / prev) & (next / prev - 1)) != 0) {
      throw std::invalid_argument("K schedule must grow by powers of two: " + std::to_string(prev) +
                                  " -> " + std::to_string(next));
    }
  }
  if (!steps_per_stage.empty() && steps_per_stage.size() != k_schedule.size()) {
    throw std::invalid_argument("steps per stage needs one entry per K schedule stage");
  }
  for (int s : steps_per_stage) {
    if (s < 0) throw std::invalid_argument("steps per stage must be >= 0");
  }
  if (log_every < 1) throw std::invalid_argument("log interval must be >= 1");
  ModelConfig m = model;
  m.spline.segments = k_schedule.front();
  m.validate();
  if (m.output_dim != 1) throw std::invalid_argument("SDF models have a scalar output");
  adam.validate();
  if (sphere_init) sphere.validate();
}

std::vector<int> TrainConfig::resolved_steps() const {
  if (!steps_per_stage.empty()) return steps_per_stage;
  std::vector<int> steps(k_schedule.size(), 1000);
  steps.front() = 500;
  return steps;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch_points = 1000;
  c.k_schedule = {2, 8, 32, 128};
  c.steps_per_stage = {150, 150, 150, 250};
  c.lr = 3e-4;
  c.model.spline.channels = 64;
  c.model.hidden_width = 128;
  c.probe_points = 2000;
  return c;
}

FieldModel initial_sdf_model(const TrainConfig& config, std::optional<SphereInitResult>* info) {
  config.validate();
  ModelConfig m = config.model;
  m.spline.segments = config.k_schedule.front();
  FieldModel model = make_field_model(m, config.seed);
  if (!config.sphere_init) return model;
  auto pre = pretrain_sphere(std::move(model), config.sphere);
  model = pre.model;
  if (info) *info = std::move(pre);
  return model;
}

namespace {

void refine_to(FieldModel& model, int k) {
  auto* spline = std::get_if<SplineEncoding>(&model.encoder);
  if (!spline) return;
  while (spline->segments() < k) *spline = refine(*spline);
  if (spline->segments() != k) {
    throw std::invalid_argument("cannot refine " + std::to_string(spline->segments()) +
                                " segments to " + std::to_string(k));
  }
}

}  // namespace

TrainResult train_sdf(const PointCloud& cloud, const TrainConfig& config, const FieldModel* init,
                      const ProgressFn& progress) {
  config.validate();
  cloud.validate();
  if (cloud.dim != config.model.input_dim()) {
    throw std::invalid_argument("point cloud dimension does not match the model input");
  }
  if (!cloud.has_normals()) throw std::invalid_argument("SDF fitting needs oriented normals");

  TrainResult result;
  result.model = init ? *init : initial_sdf_model(config, &result.sphere_init);
  FieldModel& model = result.model;
  model.validate();
  const bool spline = std::holds_alternative<SplineEncoding>(model.encoder);
  if (spline && std::get<SplineEncoding>(model.encoder).segments() > config.k_schedule.front()) {
    throw std::invalid_argument("initial model has more segments than the first K stage");
  }

  const SdfLossWeights weights{config.lambda, config.tau};
  std::mt19937_64 probe_rng(config.seed ^ 0x5bd1e995u);
  const SdfBatch probe = sample_batches(cloud, -1.0, 1.0, config.probe_points, probe_rng);
  std::mt19937_64 rng(config.seed + 1);
  auto probe_loss = [&] { return sdf_loss(model, probe, weights).loss; };

  const auto steps = config.resolved_steps();
  long long global_step = 0;
  std::vector<double> params, grad;
  OptimState state;
  for (std::size_t s = 0; s < config.k_schedule.size(); ++s) {
    const int k = config.k_schedule[s];
    StageSummary summary;
    summary.k = spline ? k : 0;
    summary.pre_refine_loss = std::numeric_limits<double>::quiet_NaN();
    summary.post_refine_loss = std::numeric_limits<double>::quiet_NaN();
    if (spline) {
      const bool refines = std::get<SplineEncoding>(model.encoder).segments() != k;
      if (refines) summary.pre_refine_loss = probe_loss();
      refine_to(model, k);
      if (refines) summary.post_refine_loss = probe_loss();
    }
    summary.start_loss = probe_loss();
    params = model.flatten();
    grad.assign(params.size(), 0.0);
    state.reset(params.size());
    for (int step = 0; step < steps[s]; ++step, ++global_step) {
      const SdfBatch batch = sample_batches(cloud, -1.0, 1.0, config.batch_points, rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      const SdfLossValue value = sdf_loss(model, batch, weights, grad);
      if (!std::isfinite(value.loss)) {
        throw TrainingDiverged("loss is not finite at step " + std::to_string(global_step) +
                                   " (stage K=" + std::to_string(k) + ")",
                               global_step);
      }
      adam_step(state, params, grad, config.lr, config.adam);
      model.unflatten(params);
      if (global_step % config.log_every == 0) {
        TrainLogRow row{global_step, summary.k, value.loss, value.eikonal, value.fit, value.normal};
        result.log.push_back(row);
        if (progress) progress(row);
      }
    }
    summary.end_loss = probe_loss();
    result.stages.push_back(summary);
  }
  return result;
}

void RegressionConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");
  if (log_every < 1) throw std::invalid_argument("log interval must be >= 1");
  adam.validate();
}

std::vector<RegressionLogRow> train_regression(FieldModel& model, std::span<const double> points,
                                               std::span<const double> targets,
                                               const RegressionConfig& config) {
  config.validate();
  model.validate();
  const auto d = static_cast<std::size_t>(model.input_dim());
  const auto out = static_cast<std::size_t>(model.output_dim());
  if (points.empty() || points.size() % d != 0 || targets.size() != points.size() / d * out) {
    throw std::invalid_argument("regression data does not match the model");
  }
  const std::size_t n = points.size() / d;
  const bool full = config.batch == 0 || config.batch >= n;
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> bp, bt;
  std::vector<double> params = model.flatten();
  std::vector<double> grad(params.size());
  OptimState state(params.size());
  std::vector<RegressionLogRow> log;
  double window = 0.0;
  int in_window = 0;
  for (int step = 0; step < config.steps; ++step) {
    std::span<const double> p = points, t = targets;
    if (!full) {
      bp.resize(config.batch * d);
      bt.resize(config.batch * out);
      for (std::size_t i = 0; i < config.batch; ++i) {
        const std::size_t idx = pick(rng);
        std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(idx * d), d, bp.begin() + static_cast<std::ptrdiff_t>(i * d));
        std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>(idx * out), out, bt.begin() + static_cast<std::ptrdiff_t>(i * out));
      }
      p = bp;
      t = bt;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = config.loss == RegressionLoss::l1 ? l1_regression_loss(model, p, t, grad)
                                                          : l2_loss(model, p, t, grad);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("loss is not finite at step " + std::to_string(step), step);
    }
    adam_step(state, params, grad, config.lr, config.adam);
    model.unflatten(params);
    window += loss;
    if (++in_window == config.log_every || step + 1 == config.steps) {
      log.push_back({step, window / in_window});
      window = 0.0;
      in_window = 0;
    }
  }
  return log;
}

}  // namespace spe
