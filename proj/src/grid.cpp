#include <algorithm>
#include <stdexcept>

#include "spe/surface.hpp"

namespace spe {

ScalarGrid sample_grid(const std::function<double(const Vec3&)>& f, std::array<int, 3> resolution,
                       const Vec3& lower, const Vec3& upper) {
  ScalarGrid grid(resolution, lower, upper);
  for (int i = 0; i < resolution[0]; ++i) {
    for (int j = 0; j < resolution[1]; ++j) {
      for (int k = 0; k < resolution[2]; ++k) grid.values[grid.index(i, j, k)] = f(grid.position(i, j, k));
    }
  }
  return grid;
}

ScalarGrid analytic_grid(const AnalyticShape& shape, std::array<int, 3> resolution, const Vec3& lower,
                         const Vec3& upper) {
  validate_shape(shape);
  return sample_grid([&](const Vec3& p) { return analytic_sdf(shape, p); }, resolution, lower, upper);
}

ScalarGrid evaluate_grid(const FieldModel& model, std::array<int, 3> resolution, const Vec3& lower,
                         const Vec3& upper) {
  if (model.input_dim() != 3 || model.output_dim() != 1) {
    throw std::invalid_argument("evaluate_grid requires a scalar field over 3-D inputs");
  }
  ScalarGrid grid(resolution, lower, upper);
  constexpr std::size_t kBatch = 16384;
  const std::size_t total = grid.values.size();
  std::vector<double> points;
  points.reserve(3 * kBatch);
  const auto ny = static_cast<std::size_t>(resolution[1]);
  const auto nz = static_cast<std::size_t>(resolution[2]);
  for (std::size_t start = 0; start < total; start += kBatch) {
    const std::size_t end = std::min(total, start + kBatch);
    points.clear();
    for (std::size_t idx = start; idx < end; ++idx) {
      const auto i = static_cast<int>(idx / (ny * nz));
      const auto j = static_cast<int>((idx / nz) % ny);
      const auto k = static_cast<int>(idx % nz);
      const Vec3 p = grid.position(i, j, k);
      points.insert(points.end(), p.begin(), p.end());
    }
    const auto eval = evaluate_batch(model, points, false);
    std::copy(eval.values.begin(), eval.values.end(), grid.values.begin() + static_cast<std::ptrdiff_t>(start));
  }
  return grid;
}

}  // namespace spe
