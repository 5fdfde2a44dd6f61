#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace sgm {

// Exact 3-D kd-tree over an external point array. Queries reproduce brute
// force bit-for-bit: distances are computed as sqrt(squaredNorm) with the
// same operand order everywhere, and pruning uses strict inequalities only.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Eigen::Vector3d>& points) : points_(points) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0);
    if (!index_.empty()) root_ = build(0, static_cast<int>(index_.size()));
  }

  // Distance to the nearest point other than `self`. Requires >= 2 points.
  double nearest_excluding(int self) const {
    double best_sq = std::numeric_limits<double>::infinity();
    nearest_walk(root_, points_[self], self, best_sq);
    return std::sqrt(best_sq);
  }

  // Indices of every point with distance <= radius from `center`, ascending.
  std::vector<int> radius_query(const Eigen::Vector3d& center, double radius) const {
    std::vector<int> out;
    if (root_ >= 0 && radius >= 0.0) radius_walk(root_, center, radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr int kLeafSize = 12;

  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;   // coordinate of the partition point along axis
    int begin = 0, end = 0;
    int left = -1, right = -1;
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Eigen::Vector3d lo = points_[index_[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[index_[i]]);
      hi = hi.cwiseMax(points_[index_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    node.axis = axis;
    node.split = points_[index_[mid]][axis];
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void nearest_walk(int id, const Eigen::Vector3d& query, int self, double& best_sq) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int p = index_[i];
        if (p == self) continue;
        const double d_sq = (points_[p] - query).squaredNorm();
        if (d_sq < best_sq) best_sq = d_sq;
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    nearest_walk(near, query, self, best_sq);
    if (diff * diff <= best_sq) nearest_walk(far, query, self, best_sq);
  }

  void radius_walk(int id, const Eigen::Vector3d& center, double radius,
                   std::vector<int>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int p = index_[i];
        const double d = std::sqrt((points_[p] - center).squaredNorm());
        if (d <= radius) out.push_back(p);
      }
      return;
    }
    const double diff = center[node.axis] - node.split;
    if (diff <= radius) radius_walk(node.left, center, radius, out);
    if (-diff <= radius) radius_walk(node.right, center, radius, out);
  }

  const std::vector<Eigen::Vector3d>& points_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Disjoint-set forest with path halving.
class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

}  // namespace sgm
