#pragma once

#include <optional>
#include <string>

#include "common.hpp"

namespace spe::cli {

// Model and optimizer flags shared by fit-sdf and shape-space train. Unset
// flags keep the value of the selected preset.
struct TrainFlags {
  std::string preset = "full";
  std::optional<int> k, c, m, degree, hidden, layers, fourier_frequencies, sphere_steps, log_every;
  std::optional<double> radius, lambda, tau, lr, fourier_sigma, sphere_lr;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> schedule, steps, encoder;
  bool freeze_directions = false;
  bool no_sphere_init = false;

  void add(CLI::App* sub);
  // base is the preset's config (defaults or the desk preset).
  TrainConfig resolve(TrainConfig base) const;
};

}  // namespace spe::cli
