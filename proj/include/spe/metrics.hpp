#pragma once

#include <vector>

#include "spe/geometry.hpp"

namespace spe {

// Mean nearest-neighbour distance a->b plus b->a (Euclidean, not squared).
// Throws std::invalid_argument if either set is empty.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
// O(|a| |b|) reference for the same quantity.
double chamfer_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Mean |a - b| over lattice points; grids must share resolution and bounds.
double mae(const ScalarGrid& a, const ScalarGrid& b);

// 10 log10(1 / MSE) for images in [0, 1]; +infinity when MSE is 0.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

}  // namespace spe
