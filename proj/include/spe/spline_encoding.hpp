#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace spe {

struct SplineConfig {
  int degree = 1;
  int segments = 256;  // K
  int channels = 64;   // C
  int directions = 3;  // M
  int input_dim = 3;   // d, 2 or 3
  // Knots uniformly cover [-R, R]. Zero or negative selects sqrt(input_dim),
  // which contains the projection of every point of [-1, 1]^d.
  double domain_radius = 0.0;
  bool freeze_directions = false;
  double weight_stddev = 0.1;

  void validate() const;
  double resolved_radius() const;
};

// Gradients with respect to the trainable parameters of a SplineEncoding.
struct EncodingGrads {
  std::vector<double> d_weights;  // M x (K+1) x C
  std::vector<double> d_angles;   // M x (d-1)
};

// Spline positional encoding: M projection directions, each carrying a
// C-channel uniform B-spline on [-R, R]. The encoding of x is the sum over
// projections of psi_k(<x, D_k>).
class SplineEncoding {
 public:
  // Directions are given as angles: one polar angle per direction in 2-D,
  // (polar, azimuth) in 3-D. Weights are laid out M x (K+1) x C.
  SplineEncoding(const SplineConfig& config, std::vector<double> angles,
                 std::vector<double> weights);

  // Random unit directions and N(0, weight_stddev^2) weights.
  static SplineEncoding random(const SplineConfig& config, std::mt19937_64& rng);

  const SplineConfig& config() const { return config_; }
  int degree() const { return config_.degree; }
  int segments() const { return config_.segments; }
  int channels() const { return config_.channels; }
  int num_directions() const { return config_.directions; }
  int input_dim() const { return config_.input_dim; }
  double domain_radius() const { return radius_; }
  double knot_spacing() const { return spacing_; }
  double knot(int i) const { return -radius_ + i * spacing_; }
  bool directions_frozen() const { return config_.freeze_directions; }
  void set_directions_frozen(bool frozen) { config_.freeze_directions = frozen; }

  std::span<const double> direction(int k) const;
  std::span<const double> angles() const { return angles_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> mutable_weights() { return weights_; }
  void set_angles(std::span<const double> angles);

  // Weights of knot i of projection k (C values).
  std::span<const double> knot_weights(int k, int i) const;

  std::size_t param_count() const;

  // psi_k(t) and d psi_k / dt, each C values. Zero outside the support.
  void spline_eval(int k, double t, std::span<double> value, std::span<double> derivative) const;

  // Phi(x), C values.
  void encode(std::span<const double> x, std::span<double> out) const;

  // dPhi/dx, C x d row-major.
  void encode_jacobian(std::span<const double> x, std::span<double> jacobian) const;

  // Both at once; either span may be empty to skip it.
  void encode_with_jacobian(std::span<const double> x, std::span<double> value,
                            std::span<double> jacobian) const;

  // Accumulates into grads the parameter gradient of
  //   <g_value, Phi(x)> + <g_jacobian, dPhi/dx>
  // g_jacobian is C x d row-major and may be empty (treated as zero).
  // Direction gradients are skipped when directions are frozen.
  void accumulate_backward(std::span<const double> x, std::span<const double> g_value,
                           std::span<const double> g_jacobian, EncodingGrads& grads) const;
  void accumulate_backward(std::span<const double> x, std::span<const double> g_value,
                           std::span<const double> g_jacobian, std::span<double> d_weights,
                           std::span<double> d_angles) const;

  EncodingGrads zero_grads() const;

 private:
  void rebuild_directions();
  // Knot index range [first, last] whose basis can be non-zero at t.
  bool knot_range(double t, int& first, int& last) const;

  SplineConfig config_;
  double radius_;
  double spacing_;
  std::vector<double> angles_;
  std::vector<double> weights_;
  std::vector<double> directions_;            // M x d
  std::vector<double> direction_partials_;    // M x (d-1) x d
};

// Fresh gradients for the scalar <g_value, Phi(x)> + <g_jacobian, dPhi/dx>.
// Throws std::invalid_argument if the upstream shapes do not match.
EncodingGrads encode_backward(const SplineEncoding& enc, std::span<const double> x,
                              std::span<const double> g_value, std::span<const double> g_jacobian);

// Doubles the number of segments. The new weight at refined knot j is the
// old spline evaluated there; directions and domain radius are unchanged.
SplineEncoding refine(const SplineEncoding& enc);

std::size_t param_count(const SplineEncoding& enc);

// Unit vector from angles (size d-1) for d = 2 or 3.
std::vector<double> direction_from_angles(std::span<const double> angles, int dim);
std::vector<double> angles_from_direction(std::span<const double> direction);

// Random Fourier features: rows w_j of a frequency matrix, output
// [sin(2 pi w_j.x), cos(2 pi w_j.x)] interleaved. Not trainable.
class FourierEncoding {
 public:
  FourierEncoding(int input_dim, std::vector<double> frequencies);

  static FourierEncoding random(int input_dim, int num_frequencies, double sigma,
                                std::mt19937_64& rng);

  int input_dim() const { return input_dim_; }
  int num_frequencies() const { return static_cast<int>(frequencies_.size()) / input_dim_; }
  int output_dim() const { return 2 * num_frequencies(); }
  std::span<const double> frequencies() const { return frequencies_; }

  void encode(std::span<const double> x, std::span<double> out) const;
  // value (2 M_f) and jacobian (2 M_f x d); either may be empty.
  void encode_with_jacobian(std::span<const double> x, std::span<double> value,
                            std::span<double> jacobian) const;

 private:
  int input_dim_;
  std::vector<double> frequencies_;  // M_f x d
};

std::vector<double> fourier_encode(const FourierEncoding& fe, std::span<const double> x);

// Spline encoding with d axis-aligned, frozen projections whose knot weights
// sample sin(2 pi f c_i) and cos(2 pi f c_i) for each listed frequency
// (2 channels per frequency). Throws std::invalid_argument on an empty list.
SplineEncoding init_from_fourier(std::span<const double> frequencies, int segments, int input_dim,
                                 int degree = 1, double domain_radius = 0.0);

}  // namespace spe
