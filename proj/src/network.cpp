#include "spe/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "spe/simd/kernels.hpp"

namespace spe {

void MlpShape::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MLP input width must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("MLP output width must be >= 1");
  if (layers < 1) throw std::invalid_argument("MLP needs at least one layer");
  if (layers > 1 && hidden_width < 1) throw std::invalid_argument("MLP hidden width must be >= 1");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in < 1 || layer.out < 1) throw std::invalid_argument("MLP layer widths must be >= 1");
    if (layer.weight.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.bias.size() != static_cast<std::size_t>(layer.out)) {
      throw std::invalid_argument("MLP layer " + std::to_string(l) + " has inconsistent storage");
    }
    if (l > 0 && layers_[l - 1].out != layer.in) {
      throw std::invalid_argument("MLP layer " + std::to_string(l) + " input width " +
                                  std::to_string(layer.in) + " does not chain with previous output " +
                                  std::to_string(layers_[l - 1].out));
    }
  }
}

Mlp Mlp::zeros(const MlpShape& shape) {
  shape.validate();
  std::vector<DenseLayer> layers;
  int in = shape.input_dim;
  for (int l = 0; l < shape.layers; ++l) {
    const int out = l + 1 == shape.layers ? shape.output_dim : shape.hidden_width;
    DenseLayer layer;
    layer.in = in;
    layer.out = out;
    layer.weight.assign(static_cast<std::size_t>(in) * out, 0.0);
    layer.bias.assign(static_cast<std::size_t>(out), 0.0);
    layers.push_back(std::move(layer));
    in = out;
  }
  return Mlp(std::move(layers));
}

MlpShape Mlp::shape() const {
  MlpShape s;
  s.input_dim = input_dim();
  s.output_dim = output_dim();
  s.layers = static_cast<int>(layers_.size());
  s.hidden_width = layers_.size() > 1 ? layers_.front().out : 0;
  return s;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void Mlp::flatten(std::span<double> out) const {
  if (out.size() != param_count()) throw std::invalid_argument("Mlp::flatten: size mismatch");
  auto it = out.begin();
  for (const auto& layer : layers_) it = std::copy(layer.weight.begin(), layer.weight.end(), it);
  for (const auto& layer : layers_) it = std::copy(layer.bias.begin(), layer.bias.end(), it);
}

void Mlp::unflatten(std::span<const double> in) {
  if (in.size() != param_count()) throw std::invalid_argument("Mlp::unflatten: size mismatch");
  auto it = in.begin();
  for (auto& layer : layers_) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(layer.weight.size()), layer.weight.begin());
    it += static_cast<std::ptrdiff_t>(layer.weight.size());
  }
  for (auto& layer : layers_) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(layer.bias.size()), layer.bias.begin());
    it += static_cast<std::ptrdiff_t>(layer.bias.size());
  }
}

Mlp init_random(const MlpShape& shape, std::uint64_t seed) {
  Mlp mlp = Mlp::zeros(shape);
  std::mt19937_64 rng(seed);
  for (auto& layer : mlp.mutable_layers()) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / layer.in));
    for (auto& w : layer.weight) w = normal(rng);
  }
  return mlp;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

constexpr std::size_t kChunkPoints = 128;

using simd::ConstMatrixView;
using simd::MatrixView;

// Batched forward/backward over a chunk of points. Each point occupies
// `stride` consecutive rows: the primal row, followed (when input gradients
// are tracked) by one tangent row per input coordinate. Tangent rows carry
// d(layer input)/dx_j, so after the output layer they hold grad_x F.
class Engine {
 public:
  Engine(const FieldModel& model, bool with_input_grad)
      : model_(model),
        layers_(model.mlp.layers()),
        dim_(static_cast<std::size_t>(model.input_dim())),
        enc_out_(static_cast<std::size_t>(encoder_output_dim(model.encoder))),
        stride_(with_input_grad ? 1 + dim_ : 1),
        tangents_(with_input_grad) {
    if (with_input_grad && model.output_dim() != 1) {
      throw std::invalid_argument("input gradients require a scalar-output model");
    }
    weights_t_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      weights_t_[l].resize(layer.weight.size());
      simd::transpose(simd::const_view(layer.weight, layer.out, layer.in),
                      simd::mutable_view(weights_t_[l], layer.in, layer.out));
    }
    const std::size_t rows = kChunkPoints * stride_;
    h_.resize(layers_.size());
    z_.resize(layers_.size());
    sig_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      h_[l].resize(rows * layers_[l].in);
      z_[l].resize(rows * layers_[l].out);
      sig_[l].resize(kChunkPoints * layers_[l].out);
    }
    jac_.resize(enc_out_ * dim_);
  }

  std::size_t stride() const { return stride_; }
  std::size_t dim() const { return dim_; }

  // Output layer rows for the current chunk.
  const double* output_row(std::size_t row) const {
    return z_.back().data() + row * layers_.back().out;
  }

  void forward(std::span<const double> points, std::size_t first, std::size_t count) {
    count_ = count;
    const std::size_t rows = count * stride_;
    auto& h0 = h_[0];
    for (std::size_t p = 0; p < count; ++p) {
      std::span<const double> x = points.subspan((first + p) * dim_, dim_);
      std::span<double> value(h0.data() + p * stride_ * enc_out_, enc_out_);
      if (tangents_) {
        encoder_forward(model_.encoder, x, value, jac_);
        for (std::size_t j = 0; j < dim_; ++j) {
          double* row = h0.data() + (p * stride_ + 1 + j) * enc_out_;
          for (std::size_t c = 0; c < enc_out_; ++c) row[c] = jac_[c * dim_ + j];
        }
      } else {
        encoder_forward(model_.encoder, x, value, {});
      }
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      const auto in = static_cast<std::size_t>(layer.in);
      const auto out = static_cast<std::size_t>(layer.out);
      simd::gemm(ConstMatrixView{h_[l].data(), rows, in, in},
                 simd::const_view(weights_t_[l], in, out),
                 MatrixView{z_[l].data(), rows, out, out}, false);
      for (std::size_t p = 0; p < count; ++p) {
        simd::axpy(1.0, layer.bias, std::span<double>(z_[l].data() + p * stride_ * out, out));
      }
      if (l + 1 == layers_.size()) break;
      double* next = h_[l + 1].data();
      for (std::size_t p = 0; p < count; ++p) {
        const double* zp = z_[l].data() + p * stride_ * out;
        double* sp = sig_[l].data() + p * out;
        double* hp = next + p * stride_ * out;
        for (std::size_t c = 0; c < out; ++c) {
          // Softplus and its derivative share one exponential.
          const double z = zp[c];
          const double e = std::exp(-std::abs(z));
          const double inv = 1.0 / (1.0 + e);
          sp[c] = z >= 0.0 ? inv : e * inv;
          hp[c] = std::max(z, 0.0) + std::log1p(e);
        }
        for (std::size_t j = 1; j < stride_; ++j) {
          const double* zt = zp + j * out;
          double* ht = hp + j * out;
          for (std::size_t c = 0; c < out; ++c) ht[c] = sp[c] * zt[c];
        }
      }
    }
  }

  // zbar_out holds dL/d(output rows) for the chunk (rows x out). Adds the
  // parameter gradient into flat_grad.
  void backward(std::span<const double> points, std::size_t first, std::vector<double>& zbar,
                std::span<double> flat_grad) {
    const std::size_t rows = count_ * stride_;
    const std::size_t enc_params = model_.encoder_param_count();
    std::size_t weight_offset = enc_params;
    std::vector<std::size_t> w_off(layers_.size()), b_off(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      w_off[l] = weight_offset;
      weight_offset += layers_[l].weight.size();
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      b_off[l] = weight_offset;
      weight_offset += layers_[l].bias.size();
    }
    const bool encoder_trainable = enc_params > 0;

    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& layer = layers_[li];
      const auto in = static_cast<std::size_t>(layer.in);
      const auto out = static_cast<std::size_t>(layer.out);
      // dW (out x in) += zbar^T (out x rows) * h (rows x in)
      zbar_t_.resize(out * rows);
      simd::transpose(ConstMatrixView{zbar.data(), rows, out, out},
                      MatrixView{zbar_t_.data(), out, rows, rows});
      simd::gemm(ConstMatrixView{zbar_t_.data(), out, rows, rows},
                 ConstMatrixView{h_[li].data(), rows, in, in},
                 MatrixView{flat_grad.data() + w_off[li], out, in, in}, true);
      std::span<double> db(flat_grad.data() + b_off[li], out);
      for (std::size_t p = 0; p < count_; ++p) {
        simd::axpy(1.0, std::span<const double>(zbar.data() + p * stride_ * out, out), db);
      }
      if (li == 0 && !encoder_trainable) break;
      // hbar (rows x in) = zbar (rows x out) * W (out x in)
      hbar_.resize(rows * in);
      simd::gemm(ConstMatrixView{zbar.data(), rows, out, out},
                 simd::const_view(layer.weight, out, in), MatrixView{hbar_.data(), rows, in, in},
                 false);
      if (li == 0) {
        encoder_backward(points, first, flat_grad.first(enc_params));
        break;
      }
      // Back through the Softplus of layer li-1 (width `in`).
      next_zbar_.resize(rows * in);
      for (std::size_t p = 0; p < count_; ++p) {
        const double* s = sig_[li - 1].data() + p * in;
        const double* zrows = z_[li - 1].data() + p * stride_ * in;
        const double* hb = hbar_.data() + p * stride_ * in;
        double* zb = next_zbar_.data() + p * stride_ * in;
        for (std::size_t c = 0; c < in; ++c) zb[c] = hb[c] * s[c];
        for (std::size_t j = 1; j < stride_; ++j) {
          const double* hbt = hb + j * in;
          const double* zt = zrows + j * in;
          double* zbt = zb + j * in;
          for (std::size_t c = 0; c < in; ++c) {
            zbt[c] = hbt[c] * s[c];
            zb[c] += hbt[c] * zt[c] * s[c] * (1.0 - s[c]);
          }
        }
      }
      zbar.swap(next_zbar_);
    }
  }

 private:
  void encoder_backward(std::span<const double> points, std::size_t first,
                        std::span<double> enc_grad) {
    gjac_.resize(enc_out_ * dim_);
    for (std::size_t p = 0; p < count_; ++p) {
      std::span<const double> x = points.subspan((first + p) * dim_, dim_);
      std::span<const double> gv(hbar_.data() + p * stride_ * enc_out_, enc_out_);
      if (tangents_) {
        for (std::size_t j = 0; j < dim_; ++j) {
          const double* row = hbar_.data() + (p * stride_ + 1 + j) * enc_out_;
          for (std::size_t c = 0; c < enc_out_; ++c) gjac_[c * dim_ + j] = row[c];
        }
        encoder_accumulate_backward(model_.encoder, x, gv, gjac_, enc_grad);
      } else {
        encoder_accumulate_backward(model_.encoder, x, gv, {}, enc_grad);
      }
    }
  }

  const FieldModel& model_;
  const std::vector<DenseLayer>& layers_;
  std::size_t dim_;
  std::size_t enc_out_;
  std::size_t stride_;
  bool tangents_;
  std::size_t count_ = 0;
  std::vector<std::vector<double>> weights_t_;  // per layer, in x out
  std::vector<std::vector<double>> h_;          // layer inputs
  std::vector<std::vector<double>> z_;          // layer pre-activations
  std::vector<std::vector<double>> sig_;        // sigmoid of primal pre-activations
  std::vector<double> jac_;
  std::vector<double> gjac_;
  std::vector<double> zbar_t_;
  std::vector<double> hbar_;
  std::vector<double> next_zbar_;
};

std::size_t point_count(const FieldModel& model, std::span<const double> points) {
  const auto d = static_cast<std::size_t>(model.input_dim());
  if (points.size() % d != 0) {
    throw std::invalid_argument("point buffer length " + std::to_string(points.size()) +
                                " is not a multiple of the input dimension " + std::to_string(d));
  }
  return points.size() / d;
}

}  // namespace

BatchEval evaluate_batch(const FieldModel& model, std::span<const double> points,
                         bool with_input_grad) {
  model.validate();
  const std::size_t n = point_count(model, points);
  Engine engine(model, with_input_grad);
  const auto out = static_cast<std::size_t>(model.output_dim());
  const std::size_t d = engine.dim();
  BatchEval result;
  result.values.resize(n * out);
  if (with_input_grad) result.input_grads.resize(n * d);
  for (std::size_t first = 0; first < n; first += kChunkPoints) {
    const std::size_t count = std::min(kChunkPoints, n - first);
    engine.forward(points, first, count);
    for (std::size_t p = 0; p < count; ++p) {
      const double* row = engine.output_row(p * engine.stride());
      std::copy(row, row + out, result.values.begin() + static_cast<std::ptrdiff_t>((first + p) * out));
      if (with_input_grad) {
        for (std::size_t j = 0; j < d; ++j) {
          result.input_grads[(first + p) * d + j] = engine.output_row(p * engine.stride() + 1 + j)[0];
        }
      }
    }
  }
  return result;
}

void accumulate_gradient(const FieldModel& model, std::span<const double> points,
                         bool with_input_grad, const UpstreamFn& upstream,
                         std::span<double> flat_grad) {
  model.validate();
  if (flat_grad.size() != model.param_count()) {
    throw std::invalid_argument("gradient buffer has " + std::to_string(flat_grad.size()) +
                                " entries, model has " + std::to_string(model.param_count()));
  }
  const std::size_t n = point_count(model, points);
  Engine engine(model, with_input_grad);
  const auto out = static_cast<std::size_t>(model.output_dim());
  const std::size_t d = engine.dim();
  const std::size_t stride = engine.stride();
  std::vector<double> value(out), grad(with_input_grad ? d : 0);
  std::vector<double> d_value(out), d_grad(with_input_grad ? d : 0);
  std::vector<double> zbar;
  for (std::size_t first = 0; first < n; first += kChunkPoints) {
    const std::size_t count = std::min(kChunkPoints, n - first);
    engine.forward(points, first, count);
    zbar.assign(count * stride * out, 0.0);
    bool any = false;
    for (std::size_t p = 0; p < count; ++p) {
      const double* row = engine.output_row(p * stride);
      std::copy(row, row + out, value.begin());
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = engine.output_row(p * stride + 1 + j)[0];
      std::fill(d_value.begin(), d_value.end(), 0.0);
      std::fill(d_grad.begin(), d_grad.end(), 0.0);
      upstream(first + p, value, grad, d_value, d_grad);
      double* zb = zbar.data() + p * stride * out;
      for (std::size_t o = 0; o < out; ++o) {
        zb[o] = d_value[o];
        any = any || d_value[o] != 0.0;
      }
      for (std::size_t j = 0; j < d_grad.size(); ++j) {
        zb[(1 + j) * out] = d_grad[j];
        any = any || d_grad[j] != 0.0;
      }
    }
    if (any) engine.backward(points, first, zbar, flat_grad);
  }
}

}  // namespace spe
