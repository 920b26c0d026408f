#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spe/encoder.hpp"

namespace spe {

struct MlpShape {
  int input_dim = 64;
  int hidden_width = 256;
  // Number of fully-connected layers including the linear output layer;
  // 1 means a single affine map with no hidden layer.
  int layers = 4;
  int output_dim = 1;

  void validate() const;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out
};

// Fully-connected network, Softplus on every hidden layer, linear output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // Zero weights and biases.
  static Mlp zeros(const MlpShape& shape);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  MlpShape shape() const;

  std::size_t param_count() const;
  // All layer weights (layer order), then all layer biases.
  void flatten(std::span<double> out) const;
  void unflatten(std::span<const double> in);

 private:
  std::vector<DenseLayer> layers_;
};

// Weights ~ N(0, 2 / fan_in), biases 0. Deterministic per seed.
Mlp init_random(const MlpShape& shape, std::uint64_t seed);

double softplus(double z);
double sigmoid(double z);

// Encoder followed by an MLP. The flat parameter vector is ordered as
// encoder weights, encoder angles, layer weights, layer biases.
struct FieldModel {
  Encoder encoder;
  Mlp mlp;

  void validate() const;
  int input_dim() const { return encoder_input_dim(encoder); }
  int output_dim() const { return mlp.output_dim(); }

  std::size_t encoder_param_count() const { return spe::encoder_param_count(encoder); }
  std::size_t param_count() const { return encoder_param_count() + mlp.param_count(); }
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);
  // 1 for trainable entries, 0 for frozen ones (e.g. frozen directions).
  std::vector<double> trainable_mask() const;
};

// Everything needed to build a fresh FieldModel. spline.input_dim is the
// input dimension for every encoder kind.
struct ModelConfig {
  EncoderKind encoder = EncoderKind::spline;
  SplineConfig spline;
  int fourier_frequencies = 128;
  double fourier_sigma = 4.0;
  int hidden_width = 256;
  int layers = 4;
  int output_dim = 1;

  int input_dim() const { return spline.input_dim; }
  void validate() const;
};

// Random encoder and MLP, deterministic per seed.
FieldModel make_field_model(const ModelConfig& config, std::uint64_t seed);

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named layout of the flat parameter vector.
std::vector<ParamBlock> param_layout(const FieldModel& model);

// F(x). Throws std::invalid_argument if x has the wrong dimension.
std::vector<double> forward(const FieldModel& model, std::span<const double> x);

struct ValueAndGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// (F(x), grad_x F(x)) for a scalar-output model.
ValueAndGrad forward_with_input_grad(const FieldModel& model, std::span<const double> x);

// Batched evaluation over N points (N x d row-major). values is N x out;
// input_grads (N x d) is filled only when requested (scalar output only).
struct BatchEval {
  std::vector<double> values;
  std::vector<double> input_grads;
};

BatchEval evaluate_batch(const FieldModel& model, std::span<const double> points,
                         bool with_input_grad);

// Per-point upstream derivatives of a loss with respect to F(x) (out values)
// and grad_x F(x) (d values; empty when the loss does not use it).
struct PointUpstream {
  std::vector<double> x;
  std::vector<double> d_value;
  std::vector<double> d_grad;
};

// Gradient over every parameter of
//   sum_batch [ <dL/dF, F(x)> + <dL/dgradF, grad_x F(x)> ]
// in flat order. Frozen parameters receive zero.
std::vector<double> backward(const FieldModel& model, std::span<const PointUpstream> batch);

// Fused loss driver. For every point, after the forward pass the callback
// receives (index, F(x), grad_x F(x)) and writes dL/dF and dL/dgradF into the
// provided spans (both pre-zeroed; d_grad is empty unless with_input_grad).
// The parameter gradient is added into flat_grad.
using UpstreamFn = std::function<void(std::size_t index, std::span<const double> value,
                                      std::span<const double> grad, std::span<double> d_value,
                                      std::span<double> d_grad)>;

void accumulate_gradient(const FieldModel& model, std::span<const double> points,
                         bool with_input_grad, const UpstreamFn& upstream,
                         std::span<double> flat_grad);

}  // namespace spe
