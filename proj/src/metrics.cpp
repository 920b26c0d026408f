#include "spe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spe/kd_tree.hpp"

namespace spe {

namespace {

double mean_nearest(const std::vector<Vec3>& from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest(p).distance;
  return sum / static_cast<double>(from.size());
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double mean_nearest_bruteforce(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, distance(p, q));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

void require_nonempty(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: point sets must be non-empty");
}

}  // namespace

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  require_nonempty(a, b);
  const KdTree ta(a), tb(b);
  return mean_nearest(a, tb) + mean_nearest(b, ta);
}

double chamfer_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  require_nonempty(a, b);
  return mean_nearest_bruteforce(a, b) + mean_nearest_bruteforce(b, a);
}

double mae(const ScalarGrid& a, const ScalarGrid& b) {
  a.validate();
  b.validate();
  if (a.resolution != b.resolution || a.lower != b.lower || a.upper != b.upper) {
    throw std::invalid_argument("mae: grids differ in resolution or bounds");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) sum += std::abs(a.values[i] - b.values[i]);
  return sum / static_cast<double>(a.values.size());
}

double mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw std::invalid_argument("image dimensions differ");
  }
  if (a.pixels.empty()) throw std::invalid_argument("empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.pixels.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace spe
