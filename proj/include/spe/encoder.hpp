#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "spe/spline_encoding.hpp"

namespace spe {

// Raw coordinates, phi(x) = x.
struct IdentityEncoding {
  int input_dim = 3;
};

using Encoder = std::variant<IdentityEncoding, SplineEncoding, FourierEncoding>;

enum class EncoderKind { identity, spline, fourier };

EncoderKind encoder_kind(const Encoder& encoder);
std::string encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& name);

int encoder_input_dim(const Encoder& encoder);
int encoder_output_dim(const Encoder& encoder);

// Trainable parameters: knot weights then direction angles for splines,
// nothing for the identity and Fourier encoders.
std::size_t encoder_param_count(const Encoder& encoder);

void encoder_flatten(const Encoder& encoder, std::span<double> out);
void encoder_unflatten(Encoder& encoder, std::span<const double> in);

// Value (output_dim) and jacobian (output_dim x input_dim); either may be empty.
void encoder_forward(const Encoder& encoder, std::span<const double> x, std::span<double> value,
                     std::span<double> jacobian);

// Adds the parameter gradient of <g_value, phi(x)> + <g_jacobian, dphi/dx>
// into grad (encoder_param_count entries). No-op for parameter-free encoders.
void encoder_accumulate_backward(const Encoder& encoder, std::span<const double> x,
                                 std::span<const double> g_value,
                                 std::span<const double> g_jacobian, std::span<double> grad);

// Mask over the flattened encoder parameters: 1 for trainable entries.
void encoder_trainable_mask(const Encoder& encoder, std::span<double> mask);

}  // namespace spe
