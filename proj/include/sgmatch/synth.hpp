#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/kitti_io.hpp"
#include "sgmatch/pairs.hpp"
#include "sgmatch/rng.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& msg) : Error("generation", msg) {}
};

// Abstract object archetypes, all vertical cylinders with class-dependent
// footprint and height statistics.
struct ClassGeometry {
  double min_radius = 0.2, max_radius = 0.5;
  double min_height = 2.0, max_height = 5.0;
};

struct SceneSpec {
  uint64_t rng_seed = 1;
  double extent = 60.0;  // world square spans [-extent/2, extent/2]^2
  // per-class (min, max) object counts; class ids are 1-based, 0 is background.
  // Wide ranges, including absence, make each world's class mix distinctive.
  std::vector<std::pair<int, int>> class_counts = {{2, 8}, {0, 6}, {0, 5}, {0, 2}};
  std::vector<ClassGeometry> class_geometry = {
      {0.15, 0.35, 3.0, 6.0},  // thin tall (pole-like)
      {0.3, 0.7, 2.0, 4.0},    // medium (trunk-like)
      {1.0, 1.8, 1.2, 2.0},    // wide low (vehicle-like)
      {2.0, 3.0, 5.0, 8.0},    // large tall (building-like)
  };
  double placement_margin = 2.5;   // clear space between footprints, meters
  double sensor_clearance = 7.0;   // objects keep this distance from the world center
  int max_placement_retries = 2000;

  double point_density = 3.0;       // LiDAR samples per square meter of surface
  int min_points_per_object = 80;
  double lidar_range = 60.0;

  int image_width = 64;
  int image_height = 64;
  double focal = 48.0;        // pixels
  double sensor_height = 1.6;  // meters above ground

  int num_classes() const { return static_cast<int>(class_counts.size()); }
};

struct WorldObject {
  int class_id = 0;  // 1-based
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double height = 0.0;
};

struct World {
  uint64_t seed = 0;
  std::vector<WorldObject> objects;
};

// Non-overlapping uniform placement by rejection sampling; deterministic per
// seed.
inline World generate_world(const SceneSpec& spec) {
  if (spec.extent <= 0) throw ConfigError("world extent must be positive");
  if (spec.class_geometry.size() < spec.class_counts.size()) {
    throw ConfigError("class_geometry must cover every class in class_counts");
  }
  World world;
  world.seed = spec.rng_seed;
  Rng rng(mix_seed(spec.rng_seed, 0xC0FFEEULL));
  const double half = spec.extent / 2.0;
  for (int cls = 1; cls <= spec.num_classes(); ++cls) {
    const auto [lo, hi] = spec.class_counts[cls - 1];
    if (lo < 0 || hi < lo) throw ConfigError("bad object count range for class " +
                                             std::to_string(cls));
    const ClassGeometry& geom = spec.class_geometry[cls - 1];
    const int count = rng.range_int(lo, hi);
    for (int obj = 0; obj < count; ++obj) {
      WorldObject candidate;
      candidate.class_id = cls;
      bool placed = false;
      for (int attempt = 0; attempt < spec.max_placement_retries; ++attempt) {
        candidate.radius = rng.uniform(geom.min_radius, geom.max_radius);
        candidate.height = rng.uniform(geom.min_height, geom.max_height);
        const double reach = half - candidate.radius;
        candidate.center =
            Eigen::Vector2d(rng.uniform(-reach, reach), rng.uniform(-reach, reach));
        if (candidate.center.norm() - candidate.radius < spec.sensor_clearance) continue;
        bool overlaps = false;
        for (const auto& other : world.objects) {
          const double gap = (candidate.center - other.center).norm() -
                             (candidate.radius + other.radius);
          if (gap < spec.placement_margin) {
            overlaps = true;
            break;
          }
        }
        if (!overlaps) {
          placed = true;
          break;
        }
      }
      if (!placed) {
        throw GenerationError("cannot place object " + std::to_string(world.objects.size()) +
                              " without overlap; lower the object density or enlarge the "
                              "extent");
      }
      world.objects.push_back(candidate);
    }
  }
  return world;
}

// Planar pose: position plus heading (vehicle +x is forward).
inline PoseRecord planar_pose(double x, double y, double yaw, double z = 0.0) {
  PoseRecord pose;
  pose.translation << x, y, z;
  pose.rotation << std::cos(yaw), -std::sin(yaw), 0, std::sin(yaw), std::cos(yaw), 0, 0, 0, 1;
  return pose;
}

// Lattice resolution used to sample an object's surface. Exposed so tests
// can predict exact per-object point counts.
inline std::pair<int, int> object_lattice(const WorldObject& obj, const SceneSpec& spec) {
  const double area = 2.0 * M_PI * obj.radius * obj.height;
  const int target = std::max(spec.min_points_per_object,
                              static_cast<int>(std::ceil(area * spec.point_density)));
  const double cell = std::sqrt(area / target);
  const int n_around = std::max(6, static_cast<int>(std::lround(2.0 * M_PI * obj.radius / cell)));
  const int n_vertical = std::max(3, static_cast<int>(std::lround(obj.height / cell)));
  return {n_around, n_vertical};
}

inline int object_point_count(const WorldObject& obj, const SceneSpec& spec) {
  const auto [n_around, n_vertical] = object_lattice(obj, spec);
  return n_around * n_vertical;
}

namespace detail {

// Surface samples of one object in world coordinates: a jittered lattice
// over the cylinder surface, which mirrors the structured spacing of real
// scans and keeps sampling gaps commensurate with nearest-neighbor spacing.
// The point set belongs to the world (seeded by world seed and object
// index), so every render of the same world sees the same geometry.
inline std::vector<Eigen::Vector3d> object_surface_points(const World& world, size_t obj_idx,
                                                          const SceneSpec& spec) {
  const WorldObject& obj = world.objects[obj_idx];
  const auto [n_around, n_vertical] = object_lattice(obj, spec);
  Rng rng(mix_seed(world.seed, 0xB0D1E5ULL + obj_idx));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<size_t>(n_around) * n_vertical);
  for (int ia = 0; ia < n_around; ++ia) {
    for (int iz = 0; iz < n_vertical; ++iz) {
      const double theta =
          (ia + 0.5 + rng.uniform(-0.25, 0.25)) * 2.0 * M_PI / n_around;
      const double z = std::clamp(
          (iz + 0.5 + rng.uniform(-0.25, 0.25)) * obj.height / n_vertical, 0.0, obj.height);
      pts.emplace_back(obj.center.x() + obj.radius * std::cos(theta),
                       obj.center.y() + obj.radius * std::sin(theta), z);
    }
  }
  return pts;
}

}  // namespace detail

// LiDAR view: every surface point of every in-range object, expressed in the
// sensor frame.
inline LabeledPointCloud render_cloud(const World& world, const PoseRecord& pose,
                                      const SceneSpec& spec, SceneId scene_id = {}) {
  LabeledPointCloud cloud;
  cloud.scene_id = scene_id;
  const Eigen::Matrix3d r_inv = pose.rotation.transpose();
  for (size_t i = 0; i < world.objects.size(); ++i) {
    const WorldObject& obj = world.objects[i];
    const Eigen::Vector2d to_obj = obj.center - pose.translation.head<2>();
    if (to_obj.norm() > spec.lidar_range) continue;
    for (const auto& p : detail::object_surface_points(world, i, spec)) {
      cloud.points.push_back(r_inv * (p - pose.translation));
      cloud.labels.push_back(obj.class_id);
    }
  }
  return cloud;
}

// Camera view: pinhole projection by per-pixel ray casting against the
// cylinders; the nearest object wins the pixel, background stays class 0.
// Camera axes: +z forward (vehicle +x), +x right, +y down.
inline SemanticImage render_image(const World& world, const PoseRecord& pose,
                                  const SceneSpec& spec, SceneId scene_id = {}) {
  SemanticImage img;
  img.width = spec.image_width;
  img.height = spec.image_height;
  img.labels = Eigen::MatrixXi::Zero(spec.image_height, spec.image_width);
  img.scene_id = scene_id;

  const double cx = spec.image_width / 2.0;
  const double cy = spec.image_height / 2.0;
  const Eigen::Vector3d cam_pos =
      pose.translation + Eigen::Vector3d(0, 0, spec.sensor_height);
  // columns of cam_to_world: camera x (vehicle -y), camera y (vehicle -z),
  // camera z (vehicle +x)
  Eigen::Matrix3d cam_to_world;
  cam_to_world.col(0) = pose.rotation * Eigen::Vector3d(0, -1, 0);
  cam_to_world.col(1) = pose.rotation * Eigen::Vector3d(0, 0, -1);
  cam_to_world.col(2) = pose.rotation * Eigen::Vector3d(1, 0, 0);

  for (int v = 0; v < spec.image_height; ++v) {
    for (int u = 0; u < spec.image_width; ++u) {
      const Eigen::Vector3d ray_cam((u + 0.5 - cx) / spec.focal, (v + 0.5 - cy) / spec.focal,
                                    1.0);
      const Eigen::Vector3d dir = (cam_to_world * ray_cam).normalized();
      double best_t = std::numeric_limits<double>::infinity();
      int best_class = 0;
      for (const auto& obj : world.objects) {
        // intersect with the vertical cylinder |xy - center| = radius
        const double ox = cam_pos.x() - obj.center.x();
        const double oy = cam_pos.y() - obj.center.y();
        const double a = dir.x() * dir.x() + dir.y() * dir.y();
        if (a < 1e-12) continue;
        const double b = 2.0 * (ox * dir.x() + oy * dir.y());
        const double c = ox * ox + oy * oy - obj.radius * obj.radius;
        const double disc = b * b - 4 * a * c;
        if (disc < 0) continue;
        const double sq = std::sqrt(disc);
        for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
          if (t <= 1e-9 || t >= best_t) continue;
          const double z = cam_pos.z() + t * dir.z();
          if (z < 0.0 || z > obj.height) continue;
          best_t = t;
          best_class = obj.class_id;
        }
      }
      img.labels(v, u) = best_class;
    }
  }
  return img;
}

// ---- paired datasets -----------------------------------------------------------

struct SynthDataset {
  std::map<SceneId, LabeledPointCloud> clouds;
  std::map<SceneId, SemanticImage> images;
  std::vector<SamplePair> pairs;
};

struct MakeDatasetConfig {
  double pos_offset = 1.8;   // positive image pose within this distance, < 2 m
  double neg_offset = 25.0;  // same-world negative distance, > 20 m
  bool cross_world_negatives = true;
  double yaw_jitter = 0.3;  // radians, view variation between the two sides
};

// One positive and one negative pair per world. Positives render the image
// near the cloud pose in the same world; negatives pair the image with the
// next world's cloud (or a far-offset pose of the same world). Labels are
// exact by construction.
inline SynthDataset make_dataset(const SceneSpec& spec, int n_worlds,
                                 const MakeDatasetConfig& cfg = {}) {
  if (cfg.pos_offset > 2.0) throw ConfigError("pos_offset must respect the 2 m threshold");
  if (!cfg.cross_world_negatives && cfg.neg_offset < 20.0) {
    throw ConfigError("neg_offset must respect the 20 m threshold");
  }
  if (n_worlds < 2) throw ConfigError("need at least 2 worlds");

  SynthDataset data;
  std::vector<PoseRecord> cloud_poses(n_worlds);
  for (int w = 0; w < n_worlds; ++w) {
    SceneSpec world_spec = spec;
    world_spec.rng_seed = mix_seed(spec.rng_seed, 0x700D5EEDULL + w);
    const World world = generate_world(world_spec);
    Rng rng(mix_seed(world_spec.rng_seed, 0x9A9A9AULL));

    // both sensors ride the same vehicle: the pose heads toward the scene
    // content, and the image view differs from the map pose only by the
    // configured offset and yaw jitter
    const double reach = spec.extent / 8.0;
    const double px = rng.uniform(-reach, reach);
    const double py = rng.uniform(-reach, reach);
    Eigen::Vector2d object_centroid = Eigen::Vector2d::Zero();
    for (const auto& obj : world.objects) object_centroid += obj.center;
    if (!world.objects.empty()) object_centroid /= static_cast<double>(world.objects.size());
    const double heading = std::atan2(object_centroid.y() - py, object_centroid.x() - px);
    const PoseRecord cloud_pose = planar_pose(px, py, heading);
    cloud_poses[w] = cloud_pose;
    const SceneId cloud_id{w, 0};
    data.clouds.emplace(cloud_id, render_cloud(world, cloud_pose, world_spec, cloud_id));

    const double offset_len = rng.uniform(0.1, cfg.pos_offset);
    const double offset_dir = rng.uniform(0, 2 * M_PI);
    const double img_x = px + offset_len * std::cos(offset_dir);
    const double img_y = py + offset_len * std::sin(offset_dir);
    const double yaw = heading + rng.uniform(-cfg.yaw_jitter, cfg.yaw_jitter);
    const PoseRecord image_pose = planar_pose(img_x, img_y, yaw);
    const SceneId image_id{w, 1};
    data.images.emplace(image_id, render_image(world, image_pose, world_spec, image_id));

    data.pairs.push_back(
        SamplePair{image_id, cloud_id, true, pose_distance(image_pose, cloud_pose)});

    if (!cfg.cross_world_negatives) {
      // far-offset render of the same world
      const double far_dir = rng.uniform(0, 2 * M_PI);
      const PoseRecord far_pose =
          planar_pose(cloud_pose.translation.x() + cfg.neg_offset * std::cos(far_dir),
                      cloud_pose.translation.y() + cfg.neg_offset * std::sin(far_dir),
                      rng.uniform(0, 2 * M_PI));
      const SceneId far_id{w, 2};
      data.images.emplace(far_id, render_image(world, far_pose, world_spec, far_id));
      data.pairs.push_back(
          SamplePair{far_id, cloud_id, false, pose_distance(far_pose, cloud_pose)});
    }
  }
  if (cfg.cross_world_negatives) {
    for (int w = 0; w < n_worlds; ++w) {
      const SceneId image_id{w, 1};
      const SceneId cloud_id{(w + 1) % n_worlds, 0};
      data.pairs.push_back(SamplePair{image_id, cloud_id, false,
                                      std::numeric_limits<double>::infinity()});
    }
  }
  return data;
}

// ---- on-disk generation (the synth CLI path) ------------------------------------
// One sequence per world: a jittered straight track long enough to contain
// both sub-2 m and over-20 m frame pairs, written in the exact formats
// data_ingest consumes.

struct SynthTrackConfig {
  int n_sequences = 2;
  int frames_per_sequence = 30;
  double step_length = 1.4;  // meters between consecutive frames
};

inline void write_synth_dataset(const SceneSpec& spec, const SynthTrackConfig& track,
                                const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  DatasetLayout layout{root};
  fs::create_directories(root / "poses");
  for (int seq = 0; seq < track.n_sequences; ++seq) {
    SceneSpec world_spec = spec;
    world_spec.rng_seed = mix_seed(spec.rng_seed, 0x5E0ULL + seq);
    const World world = generate_world(world_spec);
    Rng rng(mix_seed(world_spec.rng_seed, 0x77AA77ULL));

    fs::create_directories(root / "sequences" / DatasetLayout::seq_name(seq) / "velodyne");
    fs::create_directories(root / "sequences" / DatasetLayout::seq_name(seq) / "labels");
    fs::create_directories(root / "sequences" / DatasetLayout::seq_name(seq) / "semantic");

    const double span = track.frames_per_sequence * track.step_length;
    double x = -span / 2.0;
    double y = rng.uniform(-spec.extent / 8, spec.extent / 8);
    double heading = rng.uniform(-0.15, 0.15);
    std::vector<PoseRecord> poses;
    for (int f = 0; f < track.frames_per_sequence; ++f) {
      const SceneId id{seq, f};
      const PoseRecord pose = planar_pose(x, y, heading);
      poses.push_back(pose);
      save_velodyne_scan(render_cloud(world, pose, world_spec, id), layout.scan_path(id),
                         layout.label_path(id));
      save_pgm(layout.semantic_path(id), render_image(world, pose, world_spec, id).labels);
      heading += rng.uniform(-0.08, 0.08);
      x += track.step_length * std::cos(heading);
      y += track.step_length * std::sin(heading);
    }
    save_poses(layout.poses_path(seq), poses);
  }
}

}  // namespace sgm
