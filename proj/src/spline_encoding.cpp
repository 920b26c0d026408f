#include "spe/spline_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "spe/bspline.hpp"
#include "spe/simd/kernels.hpp"

namespace spe {

void SplineConfig::validate() const {
  check_bspline_degree(degree);
  if (segments < 1) throw std::invalid_argument("spline segments K must be >= 1");
  if (channels < 1) throw std::invalid_argument("spline channels C must be >= 1");
  if (directions < 1) throw std::invalid_argument("projection count M must be >= 1");
  if (input_dim != 2 && input_dim != 3) {
    throw std::invalid_argument("spline encoding input dimension must be 2 or 3");
  }
  if (!std::isfinite(domain_radius)) throw std::invalid_argument("domain radius must be finite");
}

double SplineConfig::resolved_radius() const {
  return domain_radius > 0.0 ? domain_radius : std::sqrt(static_cast<double>(input_dim));
}

std::vector<double> direction_from_angles(std::span<const double> angles, int dim) {
  if (dim == 2) {
    if (angles.size() != 1) throw std::invalid_argument("2-D direction needs one angle");
    return {std::cos(angles[0]), std::sin(angles[0])};
  }
  if (dim == 3) {
    if (angles.size() != 2) throw std::invalid_argument("3-D direction needs two angles");
    const double st = std::sin(angles[0]);
    return {st * std::cos(angles[1]), st * std::sin(angles[1]), std::cos(angles[0])};
  }
  throw std::invalid_argument("direction dimension must be 2 or 3");
}

std::vector<double> angles_from_direction(std::span<const double> direction) {
  if (direction.size() == 2) return {std::atan2(direction[1], direction[0])};
  if (direction.size() == 3) {
    const double n = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] +
                               direction[2] * direction[2]);
    const double z = std::clamp(direction[2] / n, -1.0, 1.0);
    return {std::acos(z), std::atan2(direction[1], direction[0])};
  }
  throw std::invalid_argument("direction dimension must be 2 or 3");
}

SplineEncoding::SplineEncoding(const SplineConfig& config, std::vector<double> angles,
                               std::vector<double> weights)
    : config_(config), angles_(std::move(angles)), weights_(std::move(weights)) {
  config_.validate();
  radius_ = config_.resolved_radius();
  spacing_ = 2.0 * radius_ / config_.segments;
  const auto m = static_cast<std::size_t>(config_.directions);
  const auto d = static_cast<std::size_t>(config_.input_dim);
  if (angles_.size() != m * (d - 1)) {
    throw std::invalid_argument("spline encoding: expected " + std::to_string(m * (d - 1)) +
                                " direction angles, got " + std::to_string(angles_.size()));
  }
  const std::size_t expected =
      m * static_cast<std::size_t>(config_.segments + 1) * static_cast<std::size_t>(config_.channels);
  if (weights_.size() != expected) {
    throw std::invalid_argument("spline encoding: expected " + std::to_string(expected) +
                                " knot weights, got " + std::to_string(weights_.size()));
  }
  rebuild_directions();
}

SplineEncoding SplineEncoding::random(const SplineConfig& config, std::mt19937_64& rng) {
  config.validate();
  const auto m = static_cast<std::size_t>(config.directions);
  const auto d = static_cast<std::size_t>(config.input_dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> angles;
  angles.reserve(m * (d - 1));
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> v(d);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& c : v) {
        c = normal(rng);
        n2 += c * c;
      }
    } while (n2 < 1e-12);
    const auto a = angles_from_direction(v);
    angles.insert(angles.end(), a.begin(), a.end());
  }
  std::normal_distribution<double> wdist(0.0, config.weight_stddev);
  std::vector<double> weights(m * static_cast<std::size_t>(config.segments + 1) *
                              static_cast<std::size_t>(config.channels));
  for (auto& w : weights) w = wdist(rng);
  return SplineEncoding(config, std::move(angles), std::move(weights));
}

void SplineEncoding::rebuild_directions() {
  const int m = config_.directions;
  const int d = config_.input_dim;
  directions_.assign(static_cast<std::size_t>(m * d), 0.0);
  direction_partials_.assign(static_cast<std::size_t>(m * (d - 1) * d), 0.0);
  for (int k = 0; k < m; ++k) {
    const double* a = angles_.data() + k * (d - 1);
    double* dir = directions_.data() + k * d;
    double* part = direction_partials_.data() + k * (d - 1) * d;
    if (d == 2) {
      dir[0] = std::cos(a[0]);
      dir[1] = std::sin(a[0]);
      part[0] = -dir[1];
      part[1] = dir[0];
    } else {
      const double st = std::sin(a[0]), ct = std::cos(a[0]);
      const double sp = std::sin(a[1]), cp = std::cos(a[1]);
      dir[0] = st * cp;
      dir[1] = st * sp;
      dir[2] = ct;
      // d/d polar
      part[0] = ct * cp;
      part[1] = ct * sp;
      part[2] = -st;
      // d/d azimuth
      part[3] = -st * sp;
      part[4] = st * cp;
      part[5] = 0.0;
    }
  }
}

std::span<const double> SplineEncoding::direction(int k) const {
  const auto d = static_cast<std::size_t>(config_.input_dim);
  return std::span<const double>(directions_).subspan(static_cast<std::size_t>(k) * d, d);
}

void SplineEncoding::set_angles(std::span<const double> angles) {
  if (angles.size() != angles_.size()) throw std::invalid_argument("set_angles: size mismatch");
  angles_.assign(angles.begin(), angles.end());
  rebuild_directions();
}

std::span<const double> SplineEncoding::knot_weights(int k, int i) const {
  const auto c = static_cast<std::size_t>(config_.channels);
  const auto offset = (static_cast<std::size_t>(k) * (config_.segments + 1) + i) * c;
  return std::span<const double>(weights_).subspan(offset, c);
}

std::size_t SplineEncoding::param_count() const {
  const auto m = static_cast<std::size_t>(config_.directions);
  return static_cast<std::size_t>(config_.channels) * (config_.segments + 1) * m +
         static_cast<std::size_t>(config_.input_dim - 1) * m;
}

bool SplineEncoding::knot_range(double t, int& first, int& last) const {
  if (!std::isfinite(t)) return false;
  const double u = (t + radius_) / spacing_;
  const double s = bspline_support_radius(config_.degree);
  const double lo = std::floor(u - s);
  const double hi = std::ceil(u + s);
  if (hi < 0.0 || lo > config_.segments) return false;
  first = lo < 0.0 ? 0 : static_cast<int>(lo);
  last = hi > config_.segments ? config_.segments : static_cast<int>(hi);
  return first <= last;
}

void SplineEncoding::spline_eval(int k, double t, std::span<double> value,
                                 std::span<double> derivative) const {
  if (k < 0 || k >= config_.directions) throw std::out_of_range("projection index out of range");
  const auto c = static_cast<std::size_t>(config_.channels);
  if (value.size() != c || derivative.size() != c) {
    throw std::invalid_argument("spline_eval: output spans must have C entries");
  }
  std::fill(value.begin(), value.end(), 0.0);
  std::fill(derivative.begin(), derivative.end(), 0.0);
  int first = 0, last = -1;
  if (!knot_range(t, first, last)) return;
  const double u = (t + radius_) / spacing_;
  const double inv_spacing = 1.0 / spacing_;
  for (int i = first; i <= last; ++i) {
    const BasisValue b = bspline_basis(u - i, config_.degree);
    const auto w = knot_weights(k, i);
    if (b.value != 0.0) simd::axpy(b.value, w, value);
    if (b.derivative != 0.0) simd::axpy(b.derivative * inv_spacing, w, derivative);
  }
}

void SplineEncoding::encode(std::span<const double> x, std::span<double> out) const {
  encode_with_jacobian(x, out, {});
}

void SplineEncoding::encode_jacobian(std::span<const double> x, std::span<double> jacobian) const {
  encode_with_jacobian(x, {}, jacobian);
}

void SplineEncoding::encode_with_jacobian(std::span<const double> x, std::span<double> value,
                                          std::span<double> jacobian) const {
  const auto d = static_cast<std::size_t>(config_.input_dim);
  const auto c = static_cast<std::size_t>(config_.channels);
  if (x.size() != d) throw std::invalid_argument("encode: input dimension mismatch");
  const bool want_value = !value.empty();
  const bool want_jac = !jacobian.empty();
  if (want_value && value.size() != c) throw std::invalid_argument("encode: output must have C entries");
  if (want_jac && jacobian.size() != c * d) {
    throw std::invalid_argument("encode_jacobian: output must have C x d entries");
  }
  if (want_value) std::fill(value.begin(), value.end(), 0.0);
  if (want_jac) std::fill(jacobian.begin(), jacobian.end(), 0.0);

  std::vector<double> deriv(want_jac ? c : 0);
  const double inv_spacing = 1.0 / spacing_;
  for (int k = 0; k < config_.directions; ++k) {
    const auto dir = direction(k);
    double t = 0.0;
    for (std::size_t j = 0; j < d; ++j) t += x[j] * dir[j];
    int first = 0, last = -1;
    if (!knot_range(t, first, last)) continue;
    const double u = (t + radius_) / spacing_;
    if (want_jac) std::fill(deriv.begin(), deriv.end(), 0.0);
    for (int i = first; i <= last; ++i) {
      const BasisValue b = bspline_basis(u - i, config_.degree);
      const auto w = knot_weights(k, i);
      if (want_value && b.value != 0.0) simd::axpy(b.value, w, value);
      if (want_jac && b.derivative != 0.0) simd::axpy(b.derivative * inv_spacing, w, deriv);
    }
    if (want_jac) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t j = 0; j < d; ++j) jacobian[ch * d + j] += deriv[ch] * dir[j];
      }
    }
  }
}

EncodingGrads SplineEncoding::zero_grads() const {
  return {std::vector<double>(weights_.size(), 0.0), std::vector<double>(angles_.size(), 0.0)};
}

void SplineEncoding::accumulate_backward(std::span<const double> x, std::span<const double> g_value,
                                         std::span<const double> g_jacobian,
                                         EncodingGrads& grads) const {
  accumulate_backward(x, g_value, g_jacobian, grads.d_weights, grads.d_angles);
}

void SplineEncoding::accumulate_backward(std::span<const double> x, std::span<const double> g_value,
                                         std::span<const double> g_jacobian,
                                         std::span<double> d_weights,
                                         std::span<double> d_angles) const {
  const auto d = static_cast<std::size_t>(config_.input_dim);
  const auto c = static_cast<std::size_t>(config_.channels);
  if (x.size() != d || g_value.size() != c || (!g_jacobian.empty() && g_jacobian.size() != c * d)) {
    throw std::invalid_argument("encode_backward: upstream shape mismatch");
  }
  if (d_weights.size() != weights_.size() || d_angles.size() != angles_.size()) {
    throw std::invalid_argument("encode_backward: gradient buffer shape mismatch");
  }
  const bool has_jac = !g_jacobian.empty();
  const bool train_dirs = !config_.freeze_directions;
  const double inv_spacing = 1.0 / spacing_;
  const double inv_spacing2 = inv_spacing * inv_spacing;

  std::vector<double> g_jac_dir(c, 0.0);  // g_jacobian * D_k
  std::vector<double> dpsi(c), d2psi(c);
  for (int k = 0; k < config_.directions; ++k) {
    const auto dir = direction(k);
    double t = 0.0;
    for (std::size_t j = 0; j < d; ++j) t += x[j] * dir[j];
    int first = 0, last = -1;
    if (!knot_range(t, first, last)) continue;
    const double u = (t + radius_) / spacing_;
    if (has_jac) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += g_jacobian[ch * d + j] * dir[j];
        g_jac_dir[ch] = s;
      }
    }
    std::fill(dpsi.begin(), dpsi.end(), 0.0);
    std::fill(d2psi.begin(), d2psi.end(), 0.0);
    const std::size_t row_stride = static_cast<std::size_t>(config_.segments + 1) * c;
    for (int i = first; i <= last; ++i) {
      const double arg = u - i;
      const BasisValue b = bspline_basis(arg, config_.degree);
      std::span<double> dw(d_weights.data() + k * row_stride + static_cast<std::size_t>(i) * c, c);
      if (b.value != 0.0) simd::axpy(b.value, g_value, dw);
      if (has_jac && b.derivative != 0.0) simd::axpy(b.derivative * inv_spacing, g_jac_dir, dw);
      if (train_dirs) {
        const auto w = knot_weights(k, i);
        if (b.derivative != 0.0) simd::axpy(b.derivative * inv_spacing, w, dpsi);
        if (has_jac && config_.degree == 2) {
          const double b2 = bspline_second_derivative(arg, config_.degree);
          if (b2 != 0.0) simd::axpy(b2 * inv_spacing2, w, d2psi);
        }
      }
    }
    if (!train_dirs) continue;
    // d s / d D_k: the projection t depends on D_k through x, and the
    // jacobian term carries an explicit D_k factor.
    double along_x = simd::dot(g_value, dpsi);
    if (has_jac) along_x += simd::dot(g_jac_dir, d2psi);
    std::vector<double> d_dir(d);
    for (std::size_t j = 0; j < d; ++j) {
      double s = along_x * x[j];
      if (has_jac) {
        for (std::size_t ch = 0; ch < c; ++ch) s += g_jacobian[ch * d + j] * dpsi[ch];
      }
      d_dir[j] = s;
    }
    const double* part = direction_partials_.data() + static_cast<std::size_t>(k) * (d - 1) * d;
    for (std::size_t a = 0; a + 1 < d; ++a) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += d_dir[j] * part[a * d + j];
      d_angles[static_cast<std::size_t>(k) * (d - 1) + a] += s;
    }
  }
}

EncodingGrads encode_backward(const SplineEncoding& enc, std::span<const double> x,
                              std::span<const double> g_value, std::span<const double> g_jacobian) {
  EncodingGrads grads = enc.zero_grads();
  enc.accumulate_backward(x, g_value, g_jacobian, grads);
  return grads;
}

SplineEncoding refine(const SplineEncoding& enc) {
  SplineConfig config = enc.config();
  config.segments = enc.segments() * 2;
  config.domain_radius = enc.domain_radius();
  const auto c = static_cast<std::size_t>(enc.channels());
  const int new_knots = config.segments + 1;
  std::vector<double> weights(static_cast<std::size_t>(enc.num_directions()) * new_knots * c);
  std::vector<double> deriv(c);
  const double fine_spacing = enc.knot_spacing() * 0.5;
  for (int k = 0; k < enc.num_directions(); ++k) {
    for (int j = 0; j < new_knots; ++j) {
      const double t = -enc.domain_radius() + j * fine_spacing;
      std::span<double> out(weights.data() + (static_cast<std::size_t>(k) * new_knots + j) * c, c);
      enc.spline_eval(k, t, out, deriv);
    }
  }
  std::vector<double> angles(enc.angles().begin(), enc.angles().end());
  return SplineEncoding(config, std::move(angles), std::move(weights));
}

std::size_t param_count(const SplineEncoding& enc) { return enc.param_count(); }

FourierEncoding::FourierEncoding(int input_dim, std::vector<double> frequencies)
    : input_dim_(input_dim), frequencies_(std::move(frequencies)) {
  if (input_dim_ < 1) throw std::invalid_argument("Fourier encoding input dimension must be >= 1");
  if (frequencies_.empty() || frequencies_.size() % static_cast<std::size_t>(input_dim_) != 0) {
    throw std::invalid_argument("Fourier frequency matrix must be a non-empty M_f x d array");
  }
}

FourierEncoding FourierEncoding::random(int input_dim, int num_frequencies, double sigma,
                                        std::mt19937_64& rng) {
  if (num_frequencies < 1) throw std::invalid_argument("Fourier frequency count must be >= 1");
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> freqs(static_cast<std::size_t>(num_frequencies) * input_dim);
  for (auto& f : freqs) f = normal(rng);
  return FourierEncoding(input_dim, std::move(freqs));
}

void FourierEncoding::encode(std::span<const double> x, std::span<double> out) const {
  encode_with_jacobian(x, out, {});
}

void FourierEncoding::encode_with_jacobian(std::span<const double> x, std::span<double> value,
                                           std::span<double> jacobian) const {
  const auto d = static_cast<std::size_t>(input_dim_);
  const auto mf = static_cast<std::size_t>(num_frequencies());
  if (x.size() != d) throw std::invalid_argument("fourier_encode: input dimension mismatch");
  if (!value.empty() && value.size() != 2 * mf) {
    throw std::invalid_argument("fourier_encode: output must have 2 M_f entries");
  }
  if (!jacobian.empty() && jacobian.size() != 2 * mf * d) {
    throw std::invalid_argument("fourier_encode: jacobian must have 2 M_f x d entries");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t f = 0; f < mf; ++f) {
    const double* w = frequencies_.data() + f * d;
    double phase = 0.0;
    for (std::size_t j = 0; j < d; ++j) phase += w[j] * x[j];
    phase *= two_pi;
    const double s = std::sin(phase), co = std::cos(phase);
    if (!value.empty()) {
      value[2 * f] = s;
      value[2 * f + 1] = co;
    }
    if (!jacobian.empty()) {
      for (std::size_t j = 0; j < d; ++j) {
        jacobian[(2 * f) * d + j] = two_pi * co * w[j];
        jacobian[(2 * f + 1) * d + j] = -two_pi * s * w[j];
      }
    }
  }
}

std::vector<double> fourier_encode(const FourierEncoding& fe, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(fe.output_dim()));
  fe.encode(x, out);
  return out;
}

SplineEncoding init_from_fourier(std::span<const double> frequencies, int segments, int input_dim,
                                 int degree, double domain_radius) {
  if (frequencies.empty()) throw std::invalid_argument("init_from_fourier: empty frequency list");
  SplineConfig config;
  config.degree = degree;
  config.segments = segments;
  config.channels = static_cast<int>(2 * frequencies.size());
  config.directions = input_dim;
  config.input_dim = input_dim;
  config.domain_radius = domain_radius;
  config.freeze_directions = true;
  config.validate();
  const double radius = config.resolved_radius();
  const double spacing = 2.0 * radius / segments;
  const auto c = static_cast<std::size_t>(config.channels);
  std::vector<double> angles;
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(input_dim) * (segments + 1) * c);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k < input_dim; ++k) {
    std::vector<double> axis(static_cast<std::size_t>(input_dim), 0.0);
    axis[static_cast<std::size_t>(k)] = 1.0;
    const auto a = angles_from_direction(axis);
    angles.insert(angles.end(), a.begin(), a.end());
    for (int i = 0; i <= segments; ++i) {
      const double knot = -radius + i * spacing;
      for (double f : frequencies) {
        weights.push_back(std::sin(two_pi * f * knot));
        weights.push_back(std::cos(two_pi * f * knot));
      }
    }
  }
  return SplineEncoding(config, std::move(angles), std::move(weights));
}

}  // namespace spe
