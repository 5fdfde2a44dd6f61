#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"

namespace sgm {

// Reserved class id for virtual padding nodes. Never a valid input class.
constexpr int kVoidClass = -1;

// (sequence, frame) identity of one scene observation.
struct SceneId {
  int sequence = 0;
  int frame = 0;
  auto operator<=>(const SceneId&) const = default;
};

inline std::string to_string(const SceneId& id) {
  return std::to_string(id.sequence) + ":" + std::to_string(id.frame);
}

// 3-D points with per-point semantic class ids (the LiDAR-map side input).
struct LabeledPointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<int> labels;
  SceneId scene_id;

  size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() != labels.size()) {
      throw ParseError("point/label count mismatch: " + std::to_string(points.size()) +
                       " points vs " + std::to_string(labels.size()) + " labels");
    }
    for (const auto& p : points) {
      if (!p.allFinite()) throw ParseError("non-finite point coordinate");
    }
  }
};

// Per-pixel class-id raster plus optional RGB (the live camera side input).
// labels(row, col); rgb channels, when present, are H×W in [0,1].
struct SemanticImage {
  int width = 0;
  int height = 0;
  Eigen::MatrixXi labels;
  std::optional<std::array<Eigen::MatrixXd, 3>> rgb;
  SceneId scene_id;

  void validate() const {
    if (labels.rows() != height || labels.cols() != width) {
      throw ParseError("label map is " + std::to_string(labels.rows()) + "x" +
                       std::to_string(labels.cols()) + ", expected " + std::to_string(height) +
                       "x" + std::to_string(width));
    }
    if (rgb) {
      for (const auto& ch : *rgb) {
        if (ch.rows() != height || ch.cols() != width) {
          throw ParseError("rgb raster dimensions do not match label map");
        }
      }
    }
  }
};

// Ground-truth pose of one frame.
struct PoseRecord {
  SceneId scene_id;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// One labeled training example: an image scene paired with a point-cloud scene.
struct SamplePair {
  SceneId image_scene;
  SceneId cloud_scene;
  bool positive = false;
  double distance = 0.0;  // +inf for cross-track negatives
};

// One clustered semantic instance. LiDAR nodes use all three position
// components (meters); image nodes use (u=x(), v=y()) pixel centroids, z()==0.
struct InstanceNode {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int class_id = kVoidClass;
  int member_count = 0;
  bool is_virtual = false;
};

enum class Modality : uint8_t { lidar = 0, image = 1 };

inline const char* to_string(Modality m) { return m == Modality::lidar ? "lidar" : "image"; }

// Fixed-capacity node set for one modality. Slots [0, real_count) hold real
// nodes, the remainder virtual padding.
struct SemanticGraph {
  std::vector<InstanceNode> nodes;
  int real_count = 0;
  int capacity = 0;
  Modality modality = Modality::lidar;

  void validate() const {
    if (static_cast<int>(nodes.size()) != capacity) {
      throw ConfigError("graph has " + std::to_string(nodes.size()) + " slots, capacity is " +
                        std::to_string(capacity));
    }
    if (real_count < 0 || real_count > capacity) {
      throw ConfigError("real_count " + std::to_string(real_count) + " outside [0, capacity]");
    }
    for (int i = 0; i < capacity; ++i) {
      const bool should_be_virtual = i >= real_count;
      if (nodes[i].is_virtual != should_be_virtual) {
        throw ConfigError("slot " + std::to_string(i) + " virtual flag out of order");
      }
    }
  }
};

}  // namespace sgm
