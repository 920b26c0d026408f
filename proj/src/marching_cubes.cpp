#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "spe/surface.hpp"

#include "mc_tables.inc"

namespace spe {

namespace {

// Corner offsets (x, y, z) in table numbering.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// Each cube edge as (start corner, axis).
constexpr int kEdge[12][2] = {{0, 0}, {1, 1}, {3, 0}, {0, 1}, {4, 0}, {5, 1},
                              {7, 0}, {4, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2}};

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
  grid.validate();
  const auto& res = grid.resolution;
  if (res[0] < 2 || res[1] < 2 || res[2] < 2) {
    throw std::invalid_argument("marching_cubes needs at least 2 samples per axis");
  }
  TriangleMesh mesh;
  // Key: 3 * lattice index + axis for edge crossings; corners hit exactly
  // use 3 * total + lattice index so coincident vertices merge.
  const auto total = static_cast<std::uint64_t>(grid.values.size());
  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of;

  auto edge_vertex = [&](int i, int j, int k, int axis) -> std::uint32_t {
    int i2 = i, j2 = j, k2 = k;
    (axis == 0 ? i2 : axis == 1 ? j2 : k2) += 1;
    const double v1 = grid.at(i, j, k), v2 = grid.at(i2, j2, k2);
    const double t = (iso - v1) / (v2 - v1);
    std::uint64_t key;
    if (t <= 0.0) {
      key = 3 * total + grid.index(i, j, k);
    } else if (t >= 1.0) {
      key = 3 * total + grid.index(i2, j2, k2);
    } else {
      key = 3 * static_cast<std::uint64_t>(grid.index(i, j, k)) + static_cast<std::uint64_t>(axis);
    }
    auto [it, inserted] = vertex_of.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) {
      const Vec3 p1 = grid.position(i, j, k), p2 = grid.position(i2, j2, k2);
      const double s = std::clamp(t, 0.0, 1.0);
      mesh.vertices.push_back(p1 + s * (p2 - p1));
    }
    return it->second;
  };

  for (int i = 0; i + 1 < res[0]; ++i) {
    for (int j = 0; j + 1 < res[1]; ++j) {
      for (int k = 0; k + 1 < res[2]; ++k) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (grid.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < iso) cube |= 1 << c;
        }
        if (mc_tables::kEdgeTable[cube] == 0) continue;
        std::uint32_t ids[12] = {};
        for (int e = 0; e < 12; ++e) {
          if (mc_tables::kEdgeTable[cube] & (1 << e)) {
            const int* c = kCorner[kEdge[e][0]];
            ids[e] = edge_vertex(i + c[0], j + c[1], k + c[2], kEdge[e][1]);
          }
        }
        const int* row = mc_tables::kTriTable[cube];
        for (int t = 0; row[t] != -1; t += 3) {
          const std::uint32_t a = ids[row[t]], b = ids[row[t + 1]], c = ids[row[t + 2]];
          if (a == b || b == c || a == c) continue;
          mesh.triangles.push_back({a, c, b});
        }
      }
    }
  }
  return mesh;
}

}  // namespace spe
