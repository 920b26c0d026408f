#include "spe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spe {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  return (1.0 / n) * a;
}

std::vector<double> NormalizeTransform::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * (x[i] - translation[i]);
  return out;
}

std::vector<double> NormalizeTransform::inverse(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / scale + translation[i];
  return out;
}

std::span<const double> PointCloud::point(std::size_t i) const {
  return std::span<const double>(positions).subspan(i * dim, static_cast<std::size_t>(dim));
}

std::span<const double> PointCloud::normal(std::size_t i) const {
  return std::span<const double>(normals).subspan(i * dim, static_cast<std::size_t>(dim));
}

void PointCloud::validate() const {
  if (dim < 1) throw std::invalid_argument("point cloud dimension must be >= 1");
  if (positions.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("point cloud position storage is not N x dim");
  }
  for (double v : positions) {
    if (!std::isfinite(v)) throw std::invalid_argument("point cloud has non-finite positions");
  }
  if (normals.empty()) return;
  if (normals.size() != positions.size()) {
    throw std::invalid_argument("point cloud normals do not match positions");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    double n2 = 0.0;
    for (double v : normal(i)) n2 += v * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) {
      throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

void TriangleMesh::validate() const {
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t]) {
      if (idx >= vertices.size()) {
        throw std::invalid_argument("triangle " + std::to_string(t) + " references vertex " +
                                    std::to_string(idx) + " of " + std::to_string(vertices.size()));
      }
    }
  }
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * norm(cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]));
}

Vec3 TriangleMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  return normalized(cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]));
}

ScalarGrid::ScalarGrid(std::array<int, 3> res, Vec3 lo, Vec3 hi)
    : resolution(res), lower(lo), upper(hi) {
  for (int a = 0; a < 3; ++a) {
    if (res[a] < 1) throw std::invalid_argument("grid resolution must be positive");
    if (!(lo[a] < hi[a])) throw std::invalid_argument("grid bounds must satisfy min < max");
  }
  values.assign(static_cast<std::size_t>(res[0]) * res[1] * res[2], 0.0);
}

Vec3 ScalarGrid::position(int i, int j, int k) const {
  const int idx[3] = {i, j, k};
  Vec3 p{};
  for (int a = 0; a < 3; ++a) {
    p[a] = resolution[a] > 1 ? lower[a] + idx[a] * spacing(a) : 0.5 * (lower[a] + upper[a]);
  }
  return p;
}

double ScalarGrid::spacing(int axis) const {
  return resolution[axis] > 1 ? (upper[axis] - lower[axis]) / (resolution[axis] - 1) : 0.0;
}

void ScalarGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 1) throw std::invalid_argument("grid resolution must be positive");
    if (!(lower[a] < upper[a])) throw std::invalid_argument("grid bounds must satisfy min < max");
  }
  if (values.size() != static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2]) {
    throw std::invalid_argument("grid value count does not match its resolution");
  }
}

void validate_shape(const AnalyticShape& shape) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (!(s.radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, Box>) {
          for (double h : s.half_extents) {
            if (!(h > 0.0)) throw std::invalid_argument("box half extents must be positive");
          }
        } else {
          if (!(s.major_radius > 0.0) || !(s.minor_radius > 0.0)) {
            throw std::invalid_argument("torus radii must be positive");
          }
        }
      },
      shape);
}

double analytic_sdf(const AnalyticShape& shape, const Vec3& x) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return norm(x) - s.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          Vec3 q{};
          for (int a = 0; a < 3; ++a) q[a] = std::abs(x[a]) - s.half_extents[a];
          const Vec3 outside{std::max(q[0], 0.0), std::max(q[1], 0.0), std::max(q[2], 0.0)};
          return norm(outside) + std::min(std::max({q[0], q[1], q[2]}), 0.0);
        } else {
          const double ring = std::hypot(x[0], x[1]) - s.major_radius;
          return std::hypot(ring, x[2]) - s.minor_radius;
        }
      },
      shape);
}

namespace {

void push3(std::vector<double>& v, const Vec3& p) { v.insert(v.end(), p.begin(), p.end()); }

}  // namespace

PointCloud sample_analytic_surface(const AnalyticShape& shape, std::size_t n, std::mt19937_64& rng) {
  validate_shape(shape);
  PointCloud cloud;
  cloud.dim = 3;
  cloud.positions.reserve(3 * n);
  cloud.normals.reserve(3 * n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        for (std::size_t i = 0; i < n; ++i) {
          if constexpr (std::is_same_v<T, Sphere>) {
            Vec3 dir{};
            do {
              dir = {normal(rng), normal(rng), normal(rng)};
            } while (norm(dir) < 1e-12);
            dir = normalized(dir);
            push3(cloud.positions, s.radius * dir);
            push3(cloud.normals, dir);
          } else if constexpr (std::is_same_v<T, Torus>) {
            // Area element is proportional to (R + r cos v).
            double v = 0.0;
            const double big = s.major_radius, small = s.minor_radius;
            do {
              v = two_pi * uniform(rng);
            } while (uniform(rng) * (big + small) > big + small * std::cos(v));
            const double u = two_pi * uniform(rng);
            const double ring = big + small * std::cos(v);
            push3(cloud.positions, {ring * std::cos(u), ring * std::sin(u), small * std::sin(v)});
            push3(cloud.normals, {std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v)});
          } else {
            const Vec3& h = s.half_extents;
            const double areas[3] = {h[1] * h[2], h[0] * h[2], h[0] * h[1]};
            const double total = areas[0] + areas[1] + areas[2];
            double pick = uniform(rng) * total;
            int axis = 0;
            while (axis < 2 && pick >= areas[axis]) pick -= areas[axis++];
            const double sign = uniform(rng) < 0.5 ? -1.0 : 1.0;
            Vec3 p{};
            Vec3 nrm{0.0, 0.0, 0.0};
            for (int a = 0; a < 3; ++a) p[a] = (2.0 * uniform(rng) - 1.0) * h[a];
            p[axis] = sign * h[axis];
            nrm[axis] = sign;
            push3(cloud.positions, p);
            push3(cloud.normals, nrm);
          }
        }
      },
      shape);
  return cloud;
}

PointCloud normalize_to_ball(const PointCloud& cloud, double radius) {
  if (cloud.size() == 0) throw std::invalid_argument("normalize_to_ball: empty point cloud");
  if (!(radius > 0.0)) throw std::invalid_argument("normalize_to_ball: radius must be positive");
  const auto d = static_cast<std::size_t>(cloud.dim);
  const std::size_t n = cloud.size();
  std::vector<double> centroid(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centroid[j] += cloud.positions[i * d + j];
  }
  for (auto& c : centroid) c /= static_cast<double>(n);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = cloud.positions[i * d + j] - centroid[j];
      s += v * v;
    }
    max_norm = std::max(max_norm, std::sqrt(s));
  }
  if (max_norm == 0.0) throw std::invalid_argument("normalize_to_ball: all points coincide");
  PointCloud out = cloud;
  NormalizeTransform tf{radius / max_norm, centroid};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.positions[i * d + j] = tf.scale * (cloud.positions[i * d + j] - centroid[j]);
    }
  }
  out.transform = tf;
  return out;
}

PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::mt19937_64& rng) {
  mesh.validate();
  if (mesh.triangles.empty()) throw std::invalid_argument("sample_mesh_surface: mesh has no triangles");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_mesh_surface: mesh has zero area");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  PointCloud cloud;
  cloud.dim = 3;
  cloud.positions.reserve(3 * n);
  cloud.normals.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto t = static_cast<std::size_t>(it - cumulative.begin());
    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(uniform(rng));
    const double r2 = uniform(rng);
    const Vec3 p = (1.0 - r1) * mesh.vertices[tri[0]] + (r1 * (1.0 - r2)) * mesh.vertices[tri[1]] +
                   (r1 * r2) * mesh.vertices[tri[2]];
    push3(cloud.positions, p);
    push3(cloud.normals, mesh.triangle_normal(t));
  }
  return cloud;
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest point by Voronoi region of the triangle (Ericson, RTCD 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(ap);
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(bp);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return norm(p - (a + v * ab));
  }
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(cp);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return norm(p - (a + w * ac));
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm(p - (b + w * (c - b)));
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return norm(p - (a + v * ab + w * ac));
}

namespace {

enum class RayHit { miss, hit, grazing };

// Moller-Trumbore; a crossing within 1e-9 of an edge or vertex is grazing.
RayHit ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
  constexpr double kEdgeTol = 1e-9;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pvec = cross(dir, e2);
  const double det = dot(e1, pvec);
  if (std::abs(det) < 1e-15) return RayHit::miss;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = dot(tvec, pvec) * inv;
  if (u < -kEdgeTol || u > 1.0 + kEdgeTol) return RayHit::miss;
  const Vec3 qvec = cross(tvec, e1);
  const double v = dot(dir, qvec) * inv;
  if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol) return RayHit::miss;
  const double t = dot(e2, qvec) * inv;
  if (t <= 0.0) return RayHit::miss;
  if (u < kEdgeTol || v < kEdgeTol || u + v > 1.0 - kEdgeTol) return RayHit::grazing;
  return RayHit::hit;
}

}  // namespace

double mesh_sdf_bruteforce(const TriangleMesh& mesh, const Vec3& x) {
  mesh.validate();
  if (mesh.triangles.empty()) throw std::invalid_argument("mesh_sdf_bruteforce: empty mesh");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    best = std::min(best, point_triangle_distance(x, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                                  mesh.vertices[tri[2]]));
  }
  // Fixed sequence of ray directions; move to the next one on a grazing hit.
  static const Vec3 kDirections[] = {
      normalized({0.5773, 0.5774, 0.5775}), normalized({-0.3141, 0.8660, 0.3891}),
      normalized({0.7071, -0.1234, -0.6963}), normalized({-0.2718, -0.6180, 0.7373}),
      normalized({0.1618, 0.9511, -0.2632})};
  for (const Vec3& dir : kDirections) {
    int crossings = 0;
    bool grazing = false;
    for (const auto& tri : mesh.triangles) {
      const RayHit hit = ray_triangle(x, dir, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                      mesh.vertices[tri[2]]);
      if (hit == RayHit::grazing) {
        grazing = true;
        break;
      }
      if (hit == RayHit::hit) ++crossings;
    }
    if (!grazing) return crossings % 2 == 1 ? -best : best;
  }
  throw std::runtime_error("mesh_sdf_bruteforce: every probe ray grazed an edge");
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                   {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                   {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : mesh.vertices) v = normalized(v);
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find({key.first, key.second});
      if (it != midpoints.end()) return it->second;
      mesh.vertices.push_back(normalized(0.5 * (mesh.vertices[a] + mesh.vertices[b])));
      const auto idx = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
      midpoints.emplace(std::make_pair(key.first, key.second), idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const auto ab = midpoint(t[0], t[1]);
      const auto bc = midpoint(t[1], t[2]);
      const auto ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  for (auto& v : mesh.vertices) v = radius * v;
  return mesh;
}

std::vector<Vec3> to_vec3(const PointCloud& cloud) {
  if (cloud.dim != 3) throw std::invalid_argument("to_vec3: point cloud is not 3-D");
  std::vector<Vec3> out(cloud.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {cloud.positions[3 * i], cloud.positions[3 * i + 1], cloud.positions[3 * i + 2]};
  }
  return out;
}

}  // namespace spe
