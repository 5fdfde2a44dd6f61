#pragma once

#include <string>
#include <vector>

#include "sgmatch/clustering.hpp"
#include "sgmatch/encoders.hpp"
#include "sgmatch/error.hpp"
#include "sgmatch/fusion.hpp"
#include "sgmatch/graph.hpp"
#include "sgmatch/graph_net.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

// Ablation rows: base = encoders + fusion only (single dummy class, no graph
// branch); base+semantic adds class information; full adds the graph branch.
enum class Ablation { base, base_semantic, full };

inline Ablation parse_ablation(const std::string& s) {
  if (s == "base") return Ablation::base;
  if (s == "base+semantic") return Ablation::base_semantic;
  if (s == "full") return Ablation::full;
  throw ConfigError("unknown ablation '" + s + "' (base|base+semantic|full)");
}

inline const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::base: return "base";
    case Ablation::base_semantic: return "base+semantic";
    default: return "full";
  }
}

struct BranchMask {
  bool use_semantic = true;
  bool use_graph = true;
};

inline BranchMask apply_ablation(Ablation a) {
  switch (a) {
    case Ablation::base: return BranchMask{false, false};
    case Ablation::base_semantic: return BranchMask{true, false};
    default: return BranchMask{true, true};
  }
}

struct ModelConfig {
  int num_classes = 8;
  int capacity = 35;
  GraphNetConfig graph;
  EncoderConfig encoder;
  int shared_dim = 64;
  int fc_hidden = 64;
  FusionMode fusion_mode = FusionMode::multiply;
  uint64_t param_seed = 1;
  Ablation ablation = Ablation::full;
};

// Every learnable tensor of the pipeline, created in a deterministic order
// from the seed. Layer structs hold pointers into the store; the model owns
// the store and is movable but not copyable.
struct CrossModalModel {
  ModelConfig config;
  ParamStore store;
  GraphNetParams graph_net;
  PointEncoderParams point_enc;
  ImageEncoderParams image_enc;
  FusionParams fusion;
  HeadParams head;

  explicit CrossModalModel(ModelConfig cfg) : config(cfg) {
    config.graph.num_classes = config.num_classes;
    config.encoder.num_classes = config.num_classes;
    Rng rng(config.param_seed);
    graph_net = GraphNetParams::create(store, config.graph, rng);
    point_enc = PointEncoderParams::create(store, config.encoder, rng);
    image_enc = ImageEncoderParams::create(store, config.encoder, rng);
    fusion = FusionParams::create(store, config.encoder.global_dim, config.encoder.map_channels,
                                  rng);
    head = HeadParams::create(store, config.encoder.map_channels, config.encoder.global_dim,
                              config.graph.feature_dim(), config.shared_dim, config.fc_hidden,
                              rng);
  }
};

// One training/evaluation example with its graphs already assembled.
struct PreparedSample {
  LabeledPointCloud cloud;
  SemanticImage image;
  SemanticGraph lidar_graph;
  SemanticGraph image_graph;
  int label = 0;  // 1 = match
};

struct PrepConfig {
  ClusterConfig lidar_cluster = ClusterConfig::lidar_defaults();
  ClusterConfig image_cluster = ClusterConfig::image_defaults();
  int capacity = 35;
  uint64_t seed = 0;
  bool size_weighted_sampling = false;
};

inline uint64_t scene_salt(const SceneId& id, Modality m) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(id.sequence)) << 33) ^
         (static_cast<uint64_t>(static_cast<uint32_t>(id.frame)) << 1) ^
         static_cast<uint64_t>(m);
}

// Cluster both scenes into nodes and pack fixed-capacity graphs. Graph
// sampling seeds derive from the scene identity so a scene's graph does not
// depend on which pair it appears in.
inline PreparedSample prepare_sample(LabeledPointCloud cloud, SemanticImage image, int label,
                                     const PrepConfig& prep) {
  PreparedSample sample;
  const auto lidar_seed = mix_seed(prep.seed, scene_salt(cloud.scene_id, Modality::lidar));
  const auto image_seed = mix_seed(prep.seed, scene_salt(image.scene_id, Modality::image));
  sample.lidar_graph =
      build_graph(cluster_lidar_nodes(cloud, prep.lidar_cluster), prep.capacity, lidar_seed,
                  Modality::lidar, prep.size_weighted_sampling);
  sample.image_graph = build_graph(image_nodes(image, prep.image_cluster), prep.capacity,
                                   image_seed, Modality::image, prep.size_weighted_sampling);
  sample.cloud = std::move(cloud);
  sample.image = std::move(image);
  sample.label = label;
  return sample;
}

struct ForwardResult {
  Var match_prob;  // 1 × 1
  Var point_global;
  Var image_global;
  Var weighted_image;
  AttentionPooled graph_lidar;
  AttentionPooled graph_image;
};

// Full pipeline: both encoders, attention fusion, both graph branches (or
// zero stand-ins under ablation), shared head. Masked branches are never
// evaluated, so their parameters receive exactly zero gradient.
inline ForwardResult model_forward(Tape& t, const CrossModalModel& model,
                                   const PreparedSample& sample) {
  const BranchMask mask = apply_ablation(model.config.ablation);
  ForwardResult out;

  PointEncoded point =
      point_encoder(t, sample.cloud, model.point_enc, model.config.encoder, mask.use_semantic);
  ImageEncoded image =
      image_encoder(t, sample.image, model.image_enc, model.config.encoder, mask.use_semantic);
  Fused fused = attention_fuse(t, point.global_feature, image.global_feature, image.feature_map,
                               model.fusion, model.config.fusion_mode);

  const int d = model.config.graph.feature_dim();
  if (mask.use_graph) {
    out.graph_lidar =
        graph_branch_forward(t, sample.lidar_graph, model.graph_net.lidar, model.config.graph);
    out.graph_image = graph_branch_forward(t, sample.image_graph, model.graph_net.image,
                                           model.config.graph, sample.image.width,
                                           sample.image.height);
  } else {
    out.graph_lidar.f_whole = t.constant(Mat::Zero(1, d));
    out.graph_image.f_whole = t.constant(Mat::Zero(1, d));
    out.graph_lidar.degenerate = out.graph_image.degenerate = true;
  }

  HeadOutput head = classify_head(t, fused.weighted, point.global_feature,
                                  out.graph_image.f_whole, out.graph_lidar.f_whole, model.head);
  out.match_prob = head.match_prob;
  out.point_global = point.global_feature;
  out.image_global = image.global_feature;
  out.weighted_image = fused.weighted;
  return out;
}

inline Var sample_loss(Tape& t, const CrossModalModel& model, const PreparedSample& sample) {
  ForwardResult fr = model_forward(t, model, sample);
  return bce_loss(t, fr.match_prob, sample.label);
}

}  // namespace sgm
