#include "spe/shape_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spe {

void ShapeSpace::validate() const {
  if (encodings.empty()) throw std::invalid_argument("shape space has no encodings");
  const auto& c0 = encodings.front().config();
  for (const auto& e : encodings) {
    const auto& c = e.config();
    if (c.degree != c0.degree || c.segments != c0.segments || c.channels != c0.channels ||
        c.directions != c0.directions || c.input_dim != c0.input_dim ||
        e.domain_radius() != encodings.front().domain_radius()) {
      throw std::invalid_argument("shape space encodings do not share one configuration");
    }
  }
  if (mlp.layers().empty() || mlp.input_dim() != c0.channels || mlp.output_dim() != 1) {
    throw std::invalid_argument("shared MLP does not match the encodings");
  }
}

ShapeSpaceConfig ShapeSpaceConfig::defaults() {
  ShapeSpaceConfig c;
  c.train.k_schedule = {2, 8, 32, 64};
  c.train.model.spline.channels = 32;
  c.train.model.spline.directions = 3;
  return c;
}

ShapeSpaceConfig ShapeSpaceConfig::desk() {
  ShapeSpaceConfig c = defaults();
  const TrainConfig desk = TrainConfig::desk();
  c.train.batch_points = desk.batch_points;
  c.train.lr = 1e-3;
  c.train.model.hidden_width = desk.model.hidden_width;
  c.train.probe_points = desk.probe_points;
  c.train.steps_per_stage = {300, 300, 300, 450};
  c.fit_steps = 300;
  return c;
}

void ShapeSpaceConfig::validate() const {
  train.validate();
  if (train.model.encoder != EncoderKind::spline) {
    throw std::invalid_argument("shape spaces use spline encodings");
  }
  if (fit_steps < 0) throw std::invalid_argument("fit steps must be >= 0");
}

namespace {

void put(const SplineEncoding& e, std::span<double> out) {
  auto w = e.weights();
  auto a = e.angles();
  std::copy(w.begin(), w.end(), out.begin());
  std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(w.size()));
}

void get(SplineEncoding& e, std::span<const double> in) {
  auto w = e.mutable_weights();
  std::copy_n(in.begin(), w.size(), w.begin());
  if (!e.directions_frozen()) e.set_angles(in.subspan(w.size(), e.angles().size()));
}

}  // namespace

ShapeSpaceResult train_shape_space(const std::vector<PointCloud>& clouds, const ShapeSpaceConfig& config) {
  config.validate();
  if (clouds.size() < 2) throw std::invalid_argument("shape space training needs at least two shapes");
  for (const auto& c : clouds) {
    c.validate();
    if (c.dim != config.train.model.input_dim() || !c.has_normals()) {
      throw std::invalid_argument("shape space inputs must be oriented clouds of the model dimension");
    }
  }
  const TrainConfig& tc = config.train;
  const FieldModel start = initial_sdf_model(tc);
  ShapeSpaceResult result;
  ShapeSpace& space = result.space;
  space.mlp = start.mlp;
  space.encodings.assign(clouds.size(), std::get<SplineEncoding>(start.encoder));

  const SdfLossWeights weights{tc.lambda, tc.tau};
  std::mt19937_64 rng(tc.seed + 1);
  const auto steps = tc.resolved_steps();
  const std::size_t nm = space.mlp.param_count();
  long long global_step = 0;
  for (std::size_t s = 0; s < tc.k_schedule.size(); ++s) {
    const int k = tc.k_schedule[s];
    for (auto& e : space.encodings) {
      while (e.segments() < k) e = refine(e);
    }
    const std::size_t ne = space.encodings.front().param_count();
    std::vector<double> params(nm + ne * clouds.size());
    space.mlp.flatten(std::span<double>(params).first(nm));
    for (std::size_t i = 0; i < clouds.size(); ++i) put(space.encodings[i], std::span<double>(params).subspan(nm + i * ne, ne));
    std::vector<double> joint(params.size()), local(ne + nm);
    OptimState state(params.size());
    for (int step = 0; step < steps[s]; ++step, ++global_step) {
      const std::size_t shape = static_cast<std::size_t>(global_step) % clouds.size();
      const FieldModel model{space.encodings[shape], space.mlp};
      const SdfBatch batch = sample_batches(clouds[shape], -1.0, 1.0, tc.batch_points, rng);
      std::fill(local.begin(), local.end(), 0.0);
      const auto value = sdf_loss(model, batch, weights, local);
      if (!std::isfinite(value.loss)) {
        throw TrainingDiverged("shape space loss is not finite at step " + std::to_string(global_step),
                               global_step);
      }
      std::fill(joint.begin(), joint.end(), 0.0);
      std::copy(local.begin() + static_cast<std::ptrdiff_t>(ne), local.end(), joint.begin());
      std::copy_n(local.begin(), ne, joint.begin() + static_cast<std::ptrdiff_t>(nm + shape * ne));
      adam_step(state, params, joint, tc.lr, tc.adam);
      space.mlp.unflatten(std::span<const double>(params).first(nm));
      for (std::size_t i = 0; i < clouds.size(); ++i) {
        get(space.encodings[i], std::span<const double>(params).subspan(nm + i * ne, ne));
      }
      if (global_step % tc.log_every == 0) result.log.push_back({global_step, shape, k, value.loss});
    }
  }
  return result;
}

namespace {

SplineEncoding mean_encoding(const ShapeSpace& space) {
  const auto& first = space.encodings.front();
  const int m = first.num_directions(), d = first.input_dim();
  std::vector<double> weights(first.weights().size(), 0.0);
  std::vector<double> dirs(static_cast<std::size_t>(m * d), 0.0);
  for (const auto& e : space.encodings) {
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += e.weights()[i];
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < d; ++j) dirs[static_cast<std::size_t>(k * d + j)] += e.direction(k)[static_cast<std::size_t>(j)];
    }
  }
  const double inv = 1.0 / static_cast<double>(space.encodings.size());
  for (auto& w : weights) w *= inv;
  std::vector<double> angles;
  for (int k = 0; k < m; ++k) {
    std::span<const double> dir(dirs.data() + k * d, static_cast<std::size_t>(d));
    double n2 = 0.0;
    for (double v : dir) n2 += v * v;
    // Opposing directions can cancel; fall back to the first shape's.
    const auto a = angles_from_direction(n2 > 1e-12 ? dir : first.direction(k));
    angles.insert(angles.end(), a.begin(), a.end());
  }
  return SplineEncoding(first.config(), std::move(angles), std::move(weights));
}

}  // namespace

FitShapeResult fit_new_shape(const ShapeSpace& space, const PointCloud& cloud, const ShapeSpaceConfig& config) {
  config.validate();
  space.validate();
  cloud.validate();
  if (!cloud.has_normals() || cloud.dim != space.encodings.front().input_dim()) {
    throw std::invalid_argument("new shape must be an oriented cloud of the model dimension");
  }
  const TrainConfig& tc = config.train;
  FieldModel model{mean_encoding(space), space.mlp};
  const SdfLossWeights weights{tc.lambda, tc.tau};
  std::mt19937_64 rng(tc.seed + 2);
  const std::size_t ne = model.encoder_param_count();
  std::vector<double> params(ne), grad(model.param_count());
  auto& enc = std::get<SplineEncoding>(model.encoder);
  put(enc, params);
  OptimState state(ne);
  FitShapeResult result{enc, 0.0, {}};
  const int k = enc.segments();
  for (int step = 0; step < config.fit_steps; ++step) {
    const SdfBatch batch = sample_batches(cloud, -1.0, 1.0, tc.batch_points, rng);
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto value = sdf_loss(model, batch, weights, grad);
    if (!std::isfinite(value.loss)) {
      throw TrainingDiverged("shape fit loss is not finite at step " + std::to_string(step), step);
    }
    adam_step(state, params, std::span<const double>(grad).first(ne), tc.lr, tc.adam);
    get(enc, params);
    if (step % tc.log_every == 0) {
      result.log.push_back({step, k, value.loss, value.eikonal, value.fit, value.normal});
    }
  }
  std::mt19937_64 probe_rng(tc.seed ^ 0x5bd1e995u);
  result.final_loss = sdf_loss(model, sample_batches(cloud, -1.0, 1.0, tc.probe_points, probe_rng), weights).loss;
  result.encoding = enc;
  return result;
}

}  // namespace spe
