#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spe/geometry.hpp"

namespace spe {

// Static 3-D kd-tree for exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }

  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };
  // Throws std::logic_error on an empty tree.
  Hit nearest(const Vec3& query) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  int build(std::uint32_t begin, std::uint32_t end);
  void search(int node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace spe
