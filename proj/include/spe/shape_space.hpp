#pragma once

#include <vector>

#include "spe/training.hpp"

namespace spe {

// Shared MLP with one spline encoding per training shape. All encodings have
// the same degree, segment count, channels, directions and radius.
struct ShapeSpace {
  Mlp mlp;
  std::vector<SplineEncoding> encodings;

  void validate() const;
  FieldModel model(std::size_t shape) const { return FieldModel{encodings.at(shape), mlp}; }
};

struct ShapeSpaceConfig {
  TrainConfig train;  // train.model.encoder must be spline
  int fit_steps = 1000;  // new-shape fitting at the final K

  // K schedule [2, 8, 32, 64], C = 32, M = 3, otherwise the TrainConfig defaults.
  static ShapeSpaceConfig defaults();
  static ShapeSpaceConfig desk();
  void validate() const;
};

struct ShapeSpaceLogRow {
  long long step = 0;
  std::size_t shape = 0;
  int stage_k = 0;
  double loss = 0.0;
};

struct ShapeSpaceResult {
  ShapeSpace space;
  std::vector<ShapeSpaceLogRow> log;
};

// Joint Adam over the shared MLP and every encoding; each step fits one shape,
// cycling through the shapes in order. Needs at least two clouds.
ShapeSpaceResult train_shape_space(const std::vector<PointCloud>& clouds, const ShapeSpaceConfig& config);

struct FitShapeResult {
  SplineEncoding encoding;
  double final_loss = 0.0;
  std::vector<TrainLogRow> log;
};

// Fits a new encoding with the MLP held fixed, starting from the mean of the
// trained encodings. Runs config.fit_steps Adam steps at config.train.lr.
FitShapeResult fit_new_shape(const ShapeSpace& space, const PointCloud& cloud,
                             const ShapeSpaceConfig& config);

}  // namespace spe
