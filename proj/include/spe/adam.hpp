#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spe {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct OptimState {
  std::vector<double> m;
  std::vector<double> v;
  long long step = 0;

  OptimState() = default;
  explicit OptimState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void reset(std::size_t n);
};

// One Adam update with bias correction, in place.
void adam_step(OptimState& state, std::span<double> params, std::span<const double> grads,
               double lr, const AdamConfig& config = {});

}  // namespace spe
