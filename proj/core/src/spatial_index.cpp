#include "slamloop/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

namespace slamloop {

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  auto lex = [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  };
  std::sort(points_.begin(), points_.end(), lex);
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  std::vector<int> ids(points_.size());
  std::iota(ids.begin(), ids.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(ids, 0, static_cast<int>(ids.size()));
}

int KdTree::build(std::vector<int>& ids, int begin, int end) {
  if (begin >= end) return -1;
  // Split on the widest axis; planar trajectories would defeat round-robin.
  Vec3 lo = points_[ids[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[ids[i]]);
    hi = hi.cwiseMax(points_[ids[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end,
                   [&](int a, int b) { return points_[a](axis) < points_[b](axis); });
  const int node = static_cast<int>(nodes_.size());
  nodes_.push_back({ids[mid], axis, -1, -1});
  const int left = build(ids, begin, mid);
  const int right = build(ids, mid + 1, end);
  nodes_[node].left = left;
  nodes_[node].right = right;
  return node;
}

// Incremental cell distance: `offset` holds the per-axis distance from the
// query to the current cell, `cell_d2` its squared norm.
void KdTree::search(int node, const Vec3& query, Vec3& offset, double cell_d2,
                    double& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const double d2 = (query - p).squaredNorm();
  if (d2 < best) best = d2;
  const double diff = query(n.axis) - p(n.axis);
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, query, offset, cell_d2, best);
  const double old = offset(n.axis);
  const double far_d2 = cell_d2 - old * old + diff * diff;
  if (far_d2 < best) {
    offset(n.axis) = diff;
    search(far, query, offset, far_d2, best);
    offset(n.axis) = old;
  }
}

double KdTree::nearest_squared(const Vec3& query) const {
  double best = std::numeric_limits<double>::infinity();
  Vec3 offset = Vec3::Zero();
  search(root_, query, offset, 0.0, best);
  return best;
}

}  // namespace slamloop
