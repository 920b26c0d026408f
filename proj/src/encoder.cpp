#include "spe/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace spe {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

EncoderKind encoder_kind(const Encoder& encoder) {
  return std::visit(overloaded{[](const IdentityEncoding&) { return EncoderKind::identity; },
                               [](const SplineEncoding&) { return EncoderKind::spline; },
                               [](const FourierEncoding&) { return EncoderKind::fourier; }},
                    encoder);
}

std::string encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::spline: return "spe";
    case EncoderKind::fourier: return "fpe";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "identity") return EncoderKind::identity;
  if (name == "spe") return EncoderKind::spline;
  if (name == "fpe") return EncoderKind::fourier;
  throw std::invalid_argument("unknown encoder '" + name + "' (expected spe, fpe or identity)");
}

int encoder_input_dim(const Encoder& encoder) {
  return std::visit(overloaded{[](const IdentityEncoding& e) { return e.input_dim; },
                               [](const SplineEncoding& e) { return e.input_dim(); },
                               [](const FourierEncoding& e) { return e.input_dim(); }},
                    encoder);
}

int encoder_output_dim(const Encoder& encoder) {
  return std::visit(overloaded{[](const IdentityEncoding& e) { return e.input_dim; },
                               [](const SplineEncoding& e) { return e.channels(); },
                               [](const FourierEncoding& e) { return e.output_dim(); }},
                    encoder);
}

std::size_t encoder_param_count(const Encoder& encoder) {
  if (const auto* spline = std::get_if<SplineEncoding>(&encoder)) return spline->param_count();
  return 0;
}

void encoder_flatten(const Encoder& encoder, std::span<double> out) {
  if (out.size() != encoder_param_count(encoder)) {
    throw std::invalid_argument("encoder_flatten: size mismatch");
  }
  if (const auto* spline = std::get_if<SplineEncoding>(&encoder)) {
    const auto w = spline->weights();
    const auto a = spline->angles();
    std::copy(w.begin(), w.end(), out.begin());
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(w.size()));
  }
}

void encoder_unflatten(Encoder& encoder, std::span<const double> in) {
  if (in.size() != encoder_param_count(encoder)) {
    throw std::invalid_argument("encoder_unflatten: size mismatch");
  }
  if (auto* spline = std::get_if<SplineEncoding>(&encoder)) {
    auto w = spline->mutable_weights();
    std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(w.size()), w.begin());
    spline->set_angles(in.subspan(w.size()));
  }
}

void encoder_forward(const Encoder& encoder, std::span<const double> x, std::span<double> value,
                     std::span<double> jacobian) {
  std::visit(overloaded{[&](const IdentityEncoding& e) {
                          const auto d = static_cast<std::size_t>(e.input_dim);
                          if (x.size() != d) throw std::invalid_argument("encode: input dimension mismatch");
                          if (!value.empty()) std::copy(x.begin(), x.end(), value.begin());
                          if (!jacobian.empty()) {
                            std::fill(jacobian.begin(), jacobian.end(), 0.0);
                            for (std::size_t j = 0; j < d; ++j) jacobian[j * d + j] = 1.0;
                          }
                        },
                        [&](const SplineEncoding& e) { e.encode_with_jacobian(x, value, jacobian); },
                        [&](const FourierEncoding& e) { e.encode_with_jacobian(x, value, jacobian); }},
             encoder);
}

void encoder_accumulate_backward(const Encoder& encoder, std::span<const double> x,
                                 std::span<const double> g_value,
                                 std::span<const double> g_jacobian, std::span<double> grad) {
  const auto* spline = std::get_if<SplineEncoding>(&encoder);
  if (spline == nullptr) return;
  if (grad.size() != spline->param_count()) {
    throw std::invalid_argument("encoder backward: gradient size mismatch");
  }
  const std::size_t nw = spline->weights().size();
  spline->accumulate_backward(x, g_value, g_jacobian, grad.first(nw), grad.subspan(nw));
}

void encoder_trainable_mask(const Encoder& encoder, std::span<double> mask) {
  if (mask.size() != encoder_param_count(encoder)) {
    throw std::invalid_argument("encoder_trainable_mask: size mismatch");
  }
  std::fill(mask.begin(), mask.end(), 1.0);
  if (const auto* spline = std::get_if<SplineEncoding>(&encoder)) {
    if (spline->directions_frozen()) {
      std::fill(mask.begin() + static_cast<std::ptrdiff_t>(spline->weights().size()), mask.end(),
                0.0);
    }
  }
}

}  // namespace spe
