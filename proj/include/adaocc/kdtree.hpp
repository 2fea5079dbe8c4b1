#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adaocc/geometry.hpp"

namespace adaocc {

// Static KD-tree over 3D points for exact nearest-neighbor and radius
// queries. Points are copied in; indices returned by queries refer to the
// original input order.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) throw std::invalid_argument("KdTree3 needs at least one point");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(points_.size());
    root_ = build(0, order_.size(), 0);
  }

  std::size_t size() const { return points_.size(); }

  struct Hit {
    std::size_t index = 0;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  // Exact nearest neighbor; ties resolve to whichever the traversal reaches
  // first (stable for a fixed input order).
  Hit nearest(const Vec3& q) const {
    Hit best;
    search(root_, q, best);
    return best;
  }

  // Indices of all points with |p - q| <= radius, in unspecified order.
  std::vector<std::size_t> radius_search(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    radius_collect(root_, q, radius * radius, out);
    return out;
  }

  // Number of points with |p - q| <= radius.
  std::size_t radius_count(const Vec3& q, double radius) const {
    std::size_t n = 0;
    radius_tally(root_, q, radius * radius, n);
    return n;
  }

 private:
  struct Node {
    std::size_t point = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t lo, std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       if (points_[a][axis] != points_[b][axis])
                         return points_[a][axis] < points_[b][axis];
                       return a < b;  // deterministic split for duplicates
                     });
    Node node;
    node.point = order_[mid];
    node.axis = axis;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[id].left = build(lo, mid, depth + 1);
    nodes_[id].right = build(mid + 1, hi, depth + 1);
    return id;
  }

  void search(int id, const Vec3& q, Hit& best) const {
    if (id < 0) return;
    const Node& node = nodes_[id];
    const Vec3& p = points_[node.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.squared_distance) best = {node.point, d2};
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (delta * delta < best.squared_distance) search(far, q, best);
  }

  void radius_collect(int id, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
    if (id < 0) return;
    const Node& node = nodes_[id];
    const Vec3& p = points_[node.point];
    if ((p - q).squaredNorm() <= r2) out.push_back(node.point);
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    radius_collect(near, q, r2, out);
    if (delta * delta <= r2) radius_collect(far, q, r2, out);
  }

  void radius_tally(int id, const Vec3& q, double r2, std::size_t& n) const {
    if (id < 0) return;
    const Node& node = nodes_[id];
    const Vec3& p = points_[node.point];
    if ((p - q).squaredNorm() <= r2) ++n;
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    radius_tally(near, q, r2, n);
    if (delta * delta <= r2) radius_tally(far, q, r2, n);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace adaocc
