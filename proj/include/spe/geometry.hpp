#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace spe {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

// x_normalized = scale * (x - translation)
struct NormalizeTransform {
  double scale = 1.0;
  std::vector<double> translation;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> x) const;
};

struct PointCloud {
  int dim = 3;
  std::vector<double> positions;  // N x dim
  std::vector<double> normals;    // N x dim or empty
  std::optional<NormalizeTransform> transform;

  std::size_t size() const { return dim > 0 ? positions.size() / static_cast<std::size_t>(dim) : 0; }
  bool has_normals() const { return !normals.empty(); }
  std::span<const double> point(std::size_t i) const;
  std::span<const double> normal(std::size_t i) const;
  // Throws std::invalid_argument on non-finite positions, mismatched
  // normal storage or normals that are not unit length to 1e-6.
  void validate() const;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  void validate() const;
  double triangle_area(std::size_t t) const;
  Vec3 triangle_normal(std::size_t t) const;
};

struct ScalarGrid {
  std::array<int, 3> resolution{0, 0, 0};
  Vec3 lower{-1.0, -1.0, -1.0};
  Vec3 upper{1.0, 1.0, 1.0};
  std::vector<double> values;  // row-major, x slowest

  ScalarGrid() = default;
  ScalarGrid(std::array<int, 3> res, Vec3 lo, Vec3 hi);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * resolution[1] + j) * resolution[2] + k;
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  // Lattice point: corners of the bounding box are included.
  Vec3 position(int i, int j, int k) const;
  double spacing(int axis) const;
  void validate() const;
};

// Interleaved channels, row-major, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> pixels;

  double at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

struct Sphere {
  double radius = 0.5;
};
struct Box {
  Vec3 half_extents{0.5, 0.5, 0.5};
};
struct Torus {
  double major_radius = 0.4;
  double minor_radius = 0.15;
};
using AnalyticShape = std::variant<Sphere, Box, Torus>;

void validate_shape(const AnalyticShape& shape);

// Exact signed distance, negative inside.
double analytic_sdf(const AnalyticShape& shape, const Vec3& x);

// n points uniformly distributed by area on the shape surface, with outward
// unit normals.
PointCloud sample_analytic_surface(const AnalyticShape& shape, std::size_t n, std::mt19937_64& rng);

// Centroid to the origin, farthest point at `radius`. Normals are unchanged.
// The transform that was applied is recorded on the returned cloud.
PointCloud normalize_to_ball(const PointCloud& cloud, double radius = 0.9);

// Area-weighted triangle choice, uniform barycentric placement, face normals.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::mt19937_64& rng);

// Unsigned distance from p to triangle (a, b, c).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Brute-force signed distance to a closed mesh: minimum point-triangle
// distance, sign from the parity of ray crossings (odd = inside).
double mesh_sdf_bruteforce(const TriangleMesh& mesh, const Vec3& x);

// Subdivided icosahedron projected to a sphere of the given radius.
TriangleMesh make_icosphere(double radius, int subdivisions);

std::vector<Vec3> to_vec3(const PointCloud& cloud);

}  // namespace spe
