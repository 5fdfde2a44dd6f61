#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/kdtree.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

struct ClusterConfig {
  double alpha = 2.0;        // clustering-radius coefficient on the NN distance
  int min_member_count = 5;  // floor for emitting a node
  int connectivity = 8;      // 4 or 8, image components
  int background_class = 0;  // never emitted as a node; -1 disables

  static ClusterConfig lidar_defaults() { return ClusterConfig{}; }
  static ClusterConfig image_defaults() {
    ClusterConfig c;
    c.min_member_count = 50;  // pixels
    return c;
  }
};

// Distance to each point's nearest neighbour (self excluded). Coincident
// points yield 0.
inline std::vector<double> nearest_neighbor_distances(
    const std::vector<Eigen::Vector3d>& points) {
  if (points.size() < 2) {
    throw DegenerateInputError("nearest-neighbor distances need at least 2 points, got " +
                               std::to_string(points.size()));
  }
  KdTree3 tree(points);
  std::vector<double> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    out[i] = tree.nearest_excluding(static_cast<int>(i));
  }
  return out;
}

// Distance-adaptive clustering. Within each semantic class, every point gets
// a radius alpha * (distance to its class-nearest neighbour); two points
// link when either one lies within the other's radius, and instances are the
// connected components of the link graph. Instance ids are dense, ordered by
// first-occurring point index; a class with a single point forms its own
// instance.
inline std::vector<int> adaptive_cluster(const LabeledPointCloud& cloud,
                                         const ClusterConfig& config) {
  cloud.validate();
  const int n = static_cast<int>(cloud.size());
  std::vector<int> instance(n, -1);
  if (n == 0) return instance;

  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) by_class[cloud.labels[i]].push_back(i);

  UnionFind forest(n);
  for (const auto& [cls, members] : by_class) {
    const int m = static_cast<int>(members.size());
    if (m < 2) continue;  // singleton: its own instance
    std::vector<Eigen::Vector3d> pts(m);
    for (int a = 0; a < m; ++a) pts[a] = cloud.points[members[a]];
    KdTree3 tree(pts);
    for (int a = 0; a < m; ++a) {
      const double radius = config.alpha * tree.nearest_excluding(a);
      for (int b : tree.radius_query(pts[a], radius)) {
        if (b != a) forest.unite(members[a], members[b]);
      }
    }
  }

  int next_id = 0;
  std::vector<int> id_of_root(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = forest.find(i);
    if (id_of_root[root] < 0) id_of_root[root] = next_id++;
    instance[i] = id_of_root[root];
  }
  return instance;
}

// One node per instance that clears the member floor: centroid position,
// the instance's class, and its point count. Background-class instances are
// dropped.
inline std::vector<InstanceNode> lidar_nodes(const LabeledPointCloud& cloud,
                                             const std::vector<int>& instance_ids,
                                             const ClusterConfig& config) {
  if (instance_ids.size() != cloud.size()) {
    throw ConfigError("instance ids not aligned with cloud: " +
                      std::to_string(instance_ids.size()) + " vs " +
                      std::to_string(cloud.size()));
  }
  const int n_instances =
      instance_ids.empty() ? 0 : *std::max_element(instance_ids.begin(), instance_ids.end()) + 1;
  std::vector<InstanceNode> sums(n_instances);
  for (size_t i = 0; i < cloud.size(); ++i) {
    InstanceNode& node = sums[instance_ids[i]];
    node.position += cloud.points[i];
    node.class_id = cloud.labels[i];
    node.member_count += 1;
  }
  std::vector<InstanceNode> nodes;
  for (InstanceNode& node : sums) {
    if (node.member_count < std::max(1, config.min_member_count)) continue;
    if (node.class_id == config.background_class) continue;
    node.position /= static_cast<double>(node.member_count);
    node.is_virtual = false;
    nodes.push_back(node);
  }
  return nodes;
}

inline std::vector<InstanceNode> cluster_lidar_nodes(const LabeledPointCloud& cloud,
                                                     const ClusterConfig& config) {
  return lidar_nodes(cloud, adaptive_cluster(cloud, config), config);
}

// Connected components of the label raster, per class, under 4- or
// 8-connectivity. Node position is the pixel centroid (u = column,
// v = row, z = 0); member_count is the pixel count.
inline std::vector<InstanceNode> image_nodes(const SemanticImage& image,
                                             const ClusterConfig& config) {
  image.validate();
  if (config.connectivity != 4 && config.connectivity != 8) {
    throw ConfigError("connectivity must be 4 or 8, got " +
                      std::to_string(config.connectivity));
  }
  const int h = image.height, w = image.width;
  std::vector<InstanceNode> nodes;
  if (h == 0 || w == 0) return nodes;

  std::vector<int> component(static_cast<size_t>(h) * w, -1);
  std::vector<std::pair<int, int>> offsets = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  if (config.connectivity == 8) {
    offsets.insert(offsets.end(), {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}});
  }

  std::vector<int> stack;
  for (int sr = 0; sr < h; ++sr) {
    for (int sc = 0; sc < w; ++sc) {
      const int start = sr * w + sc;
      if (component[start] >= 0) continue;
      const int cls = image.labels(sr, sc);
      const int comp_id = static_cast<int>(nodes.size());
      component[start] = comp_id;
      stack.assign(1, start);
      double sum_u = 0, sum_v = 0;
      int count = 0;
      while (!stack.empty()) {
        const int px = stack.back();
        stack.pop_back();
        const int r = px / w, c = px % w;
        sum_u += c;
        sum_v += r;
        ++count;
        for (const auto& [dr, dc] : offsets) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          const int np = nr * w + nc;
          if (component[np] >= 0 || image.labels(nr, nc) != cls) continue;
          component[np] = comp_id;
          stack.push_back(np);
        }
      }
      InstanceNode node;
      node.position = Eigen::Vector3d(sum_u / count, sum_v / count, 0.0);
      node.class_id = cls;
      node.member_count = count;
      node.is_virtual = false;
      nodes.push_back(node);
    }
  }

  std::vector<InstanceNode> kept;
  for (const auto& node : nodes) {
    if (node.class_id == config.background_class) continue;
    if (node.member_count < std::max(1, config.min_member_count)) continue;
    kept.push_back(node);
  }
  return kept;
}

}  // namespace sgm
