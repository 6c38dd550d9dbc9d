#pragma once

#include <span>
#include <vector>

#include "slamloop/types.hpp"

namespace slamloop {

/// Static 3-D k-d tree for exact nearest-neighbour queries. Duplicate points
/// are stored once.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Squared distance from `query` to the closest stored point.
  double nearest_squared(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& ids, int begin, int end);
  void search(int node, const Vec3& query, Vec3& offset, double cell_d2, double& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace slamloop
