#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/nn.hpp"
#include "sgmatch/tape.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

struct EncoderConfig {
  int num_classes = 8;
  int class_dim = 8;    // per-point / per-pixel class channel width
  int global_dim = 128;  // width of the global features F_p and F_i
  double range_scale = 50.0;

  // point branch: two set-abstraction levels
  int sa1_centroids = 64;
  double sa1_radius = 4.0;
  int sa1_group = 32;
  int sa1_dim = 64;
  int sa2_centroids = 16;
  double sa2_radius = 12.0;
  int sa2_group = 16;
  int sa2_dim = 96;

  // image branch: widths of the strided stack and the feature-map channels
  int conv1 = 16;
  int conv2 = 32;
  int conv3 = 48;
  int map_channels = 128;  // channels of the high-dimensional map F_h
};

// ---- deterministic, order-independent farthest point sampling -----------------

namespace detail {

inline bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

}  // namespace detail

// Farthest-point subset seeded at the lexicographically smallest point; all
// ties resolve lexicographically so the selection is independent of input
// order (exact duplicates aside, which are interchangeable anyway).
inline std::vector<int> farthest_point_indices(const std::vector<Eigen::Vector3d>& pts,
                                               int count) {
  const int n = static_cast<int>(pts.size());
  const int take = std::min(count, n);
  std::vector<int> picked;
  if (take == 0) return picked;

  int start = 0;
  for (int i = 1; i < n; ++i) {
    if (detail::lex_less(pts[i], pts[start])) start = i;
  }
  picked.push_back(start);
  std::vector<double> min_dist(n);
  for (int i = 0; i < n; ++i) min_dist[i] = (pts[i] - pts[start]).norm();

  while (static_cast<int>(picked.size()) < take) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (min_dist[i] == 0.0) continue;
      if (best < 0 || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && detail::lex_less(pts[i], pts[best]))) {
        best = i;
      }
    }
    if (best < 0) break;  // every remaining point coincides with a centroid
    picked.push_back(best);
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], (pts[i] - pts[best]).norm());
    }
  }
  return picked;
}

// Members within `radius` of each centroid, nearest-first, truncated to
// `max_group`, ties broken lexicographically. The centroid itself is always
// a member, so no group is empty.
inline std::vector<std::vector<int>> radius_groups(const std::vector<Eigen::Vector3d>& pts,
                                                   const std::vector<int>& centroids,
                                                   double radius, int max_group) {
  std::vector<std::vector<int>> groups(centroids.size());
  for (size_t g = 0; g < centroids.size(); ++g) {
    const Eigen::Vector3d& c = pts[centroids[g]];
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      const double d = (pts[i] - c).norm();
      if (d <= radius) order.emplace_back(d, i);
    }
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return detail::lex_less(pts[a.second], pts[b.second]);
    });
    const int keep = std::min<int>(max_group, static_cast<int>(order.size()));
    for (int m = 0; m < keep; ++m) groups[g].push_back(order[m].second);
  }
  return groups;
}

// ---- point encoder -------------------------------------------------------------

struct PointEncoderParams {
  Embedding class_embed;  // num_classes + 1 rows; the extra row is the
                          // shared dummy class used when semantics are off
  Mlp sa1;
  Mlp sa2;
  Linear global_proj;

  static PointEncoderParams create(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
    PointEncoderParams p;
    p.class_embed =
        Embedding::create(store, "point.class_embed", cfg.num_classes + 1, cfg.class_dim, rng);
    p.sa1 = Mlp::create(store, "point.sa1", 6 + cfg.class_dim, cfg.sa1_dim, cfg.sa1_dim, rng,
                        /*relu_out=*/true);
    p.sa2 = Mlp::create(store, "point.sa2", 3 + cfg.sa1_dim, cfg.sa2_dim, cfg.sa2_dim, rng,
                        /*relu_out=*/true);
    p.global_proj = Linear::create(store, "point.global", cfg.sa2_dim, cfg.global_dim, rng);
    return p;
  }
};

struct PointEncoded {
  Var global_feature;  // 1 × global_dim
  Var level2_features;  // n2 × sa2_dim, per-region features
};

// Two set-abstraction levels (farthest-point centroids, radius grouping,
// shared perceptron, max pool) followed by a global max pool and projection.
// `use_semantic` off routes every point through the shared dummy class row.
inline PointEncoded point_encoder(Tape& t, const LabeledPointCloud& cloud,
                                  const PointEncoderParams& params, const EncoderConfig& cfg,
                                  bool use_semantic = true) {
  cloud.validate();
  const int n = static_cast<int>(cloud.size());
  if (n == 0) throw DegenerateInputError("point encoder needs a non-empty cloud");
  for (int label : cloud.labels) {
    if (use_semantic && (label < 0 || label >= cfg.num_classes)) {
      throw ConfigError("point class id " + std::to_string(label) +
                        " outside the configured class set [0, " +
                        std::to_string(cfg.num_classes) + ")");
    }
  }

  // level 1
  const auto centroids1 = farthest_point_indices(cloud.points, cfg.sa1_centroids);
  const auto groups1 = radius_groups(cloud.points, centroids1, cfg.sa1_radius, cfg.sa1_group);
  std::vector<std::vector<int>> pool1(groups1.size());
  std::vector<int> embed_ids;
  const int dummy = cfg.num_classes;
  Mat geo1(0, 6);
  {
    int rows = 0;
    for (const auto& g : groups1) rows += static_cast<int>(g.size());
    geo1.resize(rows, 6);
    int r = 0;
    for (size_t g = 0; g < groups1.size(); ++g) {
      const Eigen::Vector3d& c = cloud.points[centroids1[g]];
      for (int idx : groups1[g]) {
        geo1.row(r).head<3>() = (cloud.points[idx] / cfg.range_scale).transpose();
        geo1.row(r).tail<3>() = ((cloud.points[idx] - c) / cfg.sa1_radius).transpose();
        embed_ids.push_back(use_semantic ? cloud.labels[idx] : dummy);
        pool1[g].push_back(r);
        ++r;
      }
    }
  }
  Var in1 = hcat(t.constant(geo1), params.class_embed.lookup(t, embed_ids));
  Var region1 = group_max(params.sa1(t, in1), pool1);  // n1 × sa1_dim

  // level 2 over the level-1 centroid positions
  std::vector<Eigen::Vector3d> centers1(centroids1.size());
  for (size_t i = 0; i < centroids1.size(); ++i) centers1[i] = cloud.points[centroids1[i]];
  const auto centroids2 = farthest_point_indices(centers1, cfg.sa2_centroids);
  const auto groups2 = radius_groups(centers1, centroids2, cfg.sa2_radius, cfg.sa2_group);
  std::vector<int> flat2;
  std::vector<std::vector<int>> pool2(groups2.size());
  Mat geo2(0, 3);
  {
    int rows = 0;
    for (const auto& g : groups2) rows += static_cast<int>(g.size());
    geo2.resize(rows, 3);
    int r = 0;
    for (size_t g = 0; g < groups2.size(); ++g) {
      const Eigen::Vector3d& c = centers1[centroids2[g]];
      for (int idx : groups2[g]) {
        geo2.row(r) = ((centers1[idx] - c) / cfg.sa2_radius).transpose();
        flat2.push_back(idx);
        pool2[g].push_back(r);
        ++r;
      }
    }
  }
  Var in2 = hcat(t.constant(geo2), gather_rows(region1, flat2));
  Var region2 = group_max(params.sa2(t, in2), pool2);  // n2 × sa2_dim

  // global readout
  std::vector<int> all_regions(groups2.size());
  std::iota(all_regions.begin(), all_regions.end(), 0);
  Var pooled = group_max(region2, {all_regions});  // 1 × sa2_dim

  PointEncoded out;
  out.level2_features = region2;
  out.global_feature = params.global_proj(t, pooled);
  return out;
}

// ---- image encoder ------------------------------------------------------------

struct ImageEncoderParams {
  Embedding class_embed;  // num_classes + 1 rows (dummy last)
  Embedding rgb_render;   // learned 3-channel rendering for rasters without RGB
  Conv2d conv_in;
  Conv2d res1_a, res1_b;
  Conv2d down2;
  Conv2d res2_a, res2_b;
  Conv2d down3;
  Conv2d res3_a, res3_b;
  Conv2d to_map;  // 1x1 to map_channels
  Linear global_proj;

  static ImageEncoderParams create(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
    ImageEncoderParams p;
    p.class_embed =
        Embedding::create(store, "image.class_embed", cfg.num_classes + 1, cfg.class_dim, rng);
    p.rgb_render = Embedding::create(store, "image.rgb_render", cfg.num_classes + 1, 3, rng);
    const int c_in = 3 + cfg.class_dim;
    p.conv_in = Conv2d::create(store, "image.conv_in", c_in, cfg.conv1, 3, 1, 1, rng);
    p.res1_a = Conv2d::create(store, "image.res1_a", cfg.conv1, cfg.conv1, 3, 1, 1, rng);
    p.res1_b = Conv2d::create(store, "image.res1_b", cfg.conv1, cfg.conv1, 3, 1, 1, rng);
    p.down2 = Conv2d::create(store, "image.down2", cfg.conv1, cfg.conv2, 3, 2, 1, rng);
    p.res2_a = Conv2d::create(store, "image.res2_a", cfg.conv2, cfg.conv2, 3, 1, 1, rng);
    p.res2_b = Conv2d::create(store, "image.res2_b", cfg.conv2, cfg.conv2, 3, 1, 1, rng);
    p.down3 = Conv2d::create(store, "image.down3", cfg.conv2, cfg.conv3, 3, 2, 1, rng);
    p.res3_a = Conv2d::create(store, "image.res3_a", cfg.conv3, cfg.conv3, 3, 1, 1, rng);
    p.res3_b = Conv2d::create(store, "image.res3_b", cfg.conv3, cfg.conv3, 3, 1, 1, rng);
    p.to_map = Conv2d::create(store, "image.to_map", cfg.conv3, cfg.map_channels, 1, 1, 0, rng);
    p.global_proj = Linear::create(store, "image.global", cfg.map_channels, cfg.global_dim, rng);
    return p;
  }
};

struct ImageEncoded {
  Var global_feature;  // 1 × global_dim (F_i)
  Var feature_map;     // map_channels × (grid_h * grid_w) (F_h)
  int grid_h = 0;
  int grid_w = 0;
};

namespace detail {

inline Var residual_block(Tape& t, Var x, const Conv2d& a, const Conv2d& b, int h, int w) {
  Var inner = b(t, relu(a(t, x, h, w)), h, w);
  return relu(add(x, inner));
}

}  // namespace detail

// Small residual stack over stacked (rgb, class-embedding) channels. F_h is
// the final convolutional map; F_i is its global average pool, projected.
inline ImageEncoded image_encoder(Tape& t, const SemanticImage& image,
                                  const ImageEncoderParams& params, const EncoderConfig& cfg,
                                  bool use_semantic = true) {
  image.validate();
  const int h = image.height, w = image.width;
  if (h == 0 || w == 0) throw DegenerateInputError("image encoder needs a non-empty raster");
  const int hw = h * w;

  std::vector<int> ids(static_cast<size_t>(hw));
  const int dummy = cfg.num_classes;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int cls = image.labels(r, c);
      if (use_semantic && (cls < 0 || cls >= cfg.num_classes)) {
        throw ConfigError("pixel class id " + std::to_string(cls) +
                          " outside the configured class set [0, " +
                          std::to_string(cfg.num_classes) + ")");
      }
      ids[static_cast<size_t>(r) * w + c] = use_semantic ? cls : dummy;
    }
  }

  Var class_channels = transpose(params.class_embed.lookup(t, ids));  // class_dim × hw
  Var rgb_channels;
  if (image.rgb) {
    Mat rgb(3, hw);
    for (int ch = 0; ch < 3; ++ch) {
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) rgb(ch, r * w + c) = (*image.rgb)[ch](r, c);
      }
    }
    rgb_channels = t.constant(rgb);
  } else {
    rgb_channels = transpose(params.rgb_render.lookup(t, ids));  // 3 × hw
  }

  Var x = vcat(rgb_channels, class_channels);
  x = relu(params.conv_in(t, x, h, w));
  x = detail::residual_block(t, x, params.res1_a, params.res1_b, h, w);

  x = relu(params.down2(t, x, h, w));
  const int h2 = (h + 2 - 3) / 2 + 1, w2 = (w + 2 - 3) / 2 + 1;
  x = detail::residual_block(t, x, params.res2_a, params.res2_b, h2, w2);

  x = relu(params.down3(t, x, h2, w2));
  const int h3 = (h2 + 2 - 3) / 2 + 1, w3 = (w2 + 2 - 3) / 2 + 1;
  x = detail::residual_block(t, x, params.res3_a, params.res3_b, h3, w3);

  ImageEncoded out;
  out.feature_map = params.to_map(t, x, h3, w3);  // map_channels × (h3*w3)
  out.grid_h = h3;
  out.grid_w = w3;
  const int grid = h3 * w3;
  Var pooled = matmul(out.feature_map, t.constant(Mat::Constant(grid, 1, 1.0 / grid)));
  out.global_feature = params.global_proj(t, transpose(pooled));  // 1 × global_dim
  return out;
}

}  // namespace sgm
