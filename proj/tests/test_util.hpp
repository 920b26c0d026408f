#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spe/network.hpp"

namespace spe::test {

inline ModelConfig tiny_config(EncoderKind kind, int degree = 1, int dim = 3) {
  ModelConfig c;
  c.encoder = kind;
  c.spline.degree = degree;
  c.spline.input_dim = dim;
  c.spline.segments = 4;
  c.spline.channels = 4;
  c.spline.directions = 3;
  c.fourier_frequencies = 3;
  c.fourier_sigma = 1.0;
  c.hidden_width = 6;
  c.layers = 3;
  return c;
}

inline std::vector<double> uniform_points(std::size_t n, int dim, std::mt19937_64& rng, double r = 0.9) {
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<double> p(n * static_cast<std::size_t>(dim));
  for (auto& v : p) v = u(rng);
  return p;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("spe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace spe::test
