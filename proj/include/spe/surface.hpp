#pragma once

#include <array>
#include <functional>

#include "spe/geometry.hpp"
#include "spe/network.hpp"

namespace spe {

// Samples f at every lattice point of the grid (corners included).
ScalarGrid sample_grid(const std::function<double(const Vec3&)>& f, std::array<int, 3> resolution,
                       const Vec3& lower, const Vec3& upper);

// Scalar-output 3-D model evaluated on the lattice, in batches.
ScalarGrid evaluate_grid(const FieldModel& model, std::array<int, 3> resolution, const Vec3& lower,
                         const Vec3& upper);

ScalarGrid analytic_grid(const AnalyticShape& shape, std::array<int, 3> resolution,
                         const Vec3& lower, const Vec3& upper);

// Iso-surface of the grid. Corners with value < iso count as inside; triangle
// normals (right-hand rule) point toward increasing values. Vertices on a
// shared lattice edge are emitted once. Requires resolution >= 2 per axis.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso = 0.0);

}  // namespace spe
