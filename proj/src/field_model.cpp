#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

#include "spe/network.hpp"

namespace spe {

void FieldModel::validate() const {
  if (mlp.layers().empty()) throw std::invalid_argument("field model has no MLP layers");
  if (encoder_output_dim(encoder) != mlp.input_dim()) {
    throw std::invalid_argument("encoder output width " + std::to_string(encoder_output_dim(encoder)) +
                                " does not match MLP input width " + std::to_string(mlp.input_dim()));
  }
}

std::vector<double> FieldModel::flatten() const {
  std::vector<double> out(param_count());
  const std::size_t ne = encoder_param_count();
  encoder_flatten(encoder, std::span<double>(out).first(ne));
  mlp.flatten(std::span<double>(out).subspan(ne));
  return out;
}

void FieldModel::unflatten(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) +
                                " entries, model expects " + std::to_string(param_count()));
  }
  const std::size_t ne = encoder_param_count();
  encoder_unflatten(encoder, params.first(ne));
  mlp.unflatten(params.subspan(ne));
}

std::vector<double> FieldModel::trainable_mask() const {
  std::vector<double> mask(param_count(), 1.0);
  encoder_trainable_mask(encoder, std::span<double>(mask).first(encoder_param_count()));
  return mask;
}

void ModelConfig::validate() const {
  spline.validate();
  if (encoder == EncoderKind::fourier) {
    if (fourier_frequencies < 1) throw std::invalid_argument("Fourier encoding needs >= 1 frequency");
    if (!(fourier_sigma > 0.0)) throw std::invalid_argument("Fourier sigma must be positive");
  }
  MlpShape shape{1, hidden_width, layers, output_dim};
  shape.validate();
}

FieldModel make_field_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  FieldModel model;
  switch (config.encoder) {
    case EncoderKind::identity:
      model.encoder = IdentityEncoding{config.input_dim()};
      break;
    case EncoderKind::spline:
      model.encoder = SplineEncoding::random(config.spline, rng);
      break;
    case EncoderKind::fourier:
      model.encoder = FourierEncoding::random(config.input_dim(), config.fourier_frequencies,
                                              config.fourier_sigma, rng);
      break;
  }
  MlpShape shape{encoder_output_dim(model.encoder), config.hidden_width, config.layers,
                 config.output_dim};
  model.mlp = init_random(shape, rng());
  return model;
}

std::vector<ParamBlock> param_layout(const FieldModel& model) {
  std::vector<ParamBlock> blocks;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t size = 1;
    for (auto s : shape) size *= s;
    blocks.push_back({std::move(name), std::move(shape), offset, size});
    offset += size;
  };
  if (const auto* spline = std::get_if<SplineEncoding>(&model.encoder)) {
    add("encoder.weights", {static_cast<std::size_t>(spline->num_directions()),
                            static_cast<std::size_t>(spline->segments() + 1),
                            static_cast<std::size_t>(spline->channels())});
    add("encoder.angles", {static_cast<std::size_t>(spline->num_directions()),
                           static_cast<std::size_t>(spline->input_dim() - 1)});
  }
  const auto& layers = model.mlp.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    add("mlp." + std::to_string(l) + ".weight",
        {static_cast<std::size_t>(layers[l].out), static_cast<std::size_t>(layers[l].in)});
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    add("mlp." + std::to_string(l) + ".bias", {static_cast<std::size_t>(layers[l].out)});
  }
  return blocks;
}

std::vector<double> forward(const FieldModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.input_dim())) {
    throw std::invalid_argument("forward: expected a " + std::to_string(model.input_dim()) +
                                "-vector, got " + std::to_string(x.size()) + " values");
  }
  return evaluate_batch(model, x, false).values;
}

ValueAndGrad forward_with_input_grad(const FieldModel& model, std::span<const double> x) {
  if (model.output_dim() != 1) {
    throw std::invalid_argument("forward_with_input_grad requires a scalar-output model");
  }
  if (x.size() != static_cast<std::size_t>(model.input_dim())) {
    throw std::invalid_argument("forward_with_input_grad: input dimension mismatch");
  }
  auto eval = evaluate_batch(model, x, true);
  return {eval.values[0], std::move(eval.input_grads)};
}

std::vector<double> backward(const FieldModel& model, std::span<const PointUpstream> batch) {
  const auto d = static_cast<std::size_t>(model.input_dim());
  const auto out = static_cast<std::size_t>(model.output_dim());
  bool with_grad = false;
  std::vector<double> points;
  points.reserve(batch.size() * d);
  for (const auto& item : batch) {
    if (item.x.size() != d || item.d_value.size() != out ||
        (!item.d_grad.empty() && item.d_grad.size() != d)) {
      throw std::invalid_argument("backward: upstream shape mismatch");
    }
    with_grad = with_grad || !item.d_grad.empty();
    points.insert(points.end(), item.x.begin(), item.x.end());
  }
  std::vector<double> grad(model.param_count(), 0.0);
  if (batch.empty()) return grad;
  accumulate_gradient(
      model, points, with_grad,
      [&](std::size_t i, std::span<const double>, std::span<const double>, std::span<double> dv,
          std::span<double> dg) {
        std::copy(batch[i].d_value.begin(), batch[i].d_value.end(), dv.begin());
        if (!batch[i].d_grad.empty()) std::copy(batch[i].d_grad.begin(), batch[i].d_grad.end(), dg.begin());
      },
      grad);
  return grad;
}

}  // namespace spe
