#pragma once

#include <string>

#include "sgmatch/clustering.hpp"
#include "sgmatch/model.hpp"
#include "sgmatch/pairs.hpp"
#include "sgmatch/synth.hpp"
#include "sgmatch/train.hpp"

namespace sgm {

// Flat bag of every run-configurable knob, shared by the CLI flags and the
// key-value config file. Field defaults are the project defaults.
struct RunOptions {
  // paths
  std::string data_root;
  std::string out_dir = "out";

  // global
  uint64_t seed = 0;
  std::string ablation = "full";

  // model dimensions
  int num_classes = 8;
  int capacity = 35;
  int k = 5;
  int graph_class_dim = 32;
  int graph_pos_dim = 32;
  int graph_edge_hidden = 64;
  bool share_graph_weights = true;
  int encoder_class_dim = 8;
  int global_dim = 128;
  int map_channels = 128;
  int conv1 = 16, conv2 = 32, conv3 = 48;
  int sa1_centroids = 64, sa2_centroids = 16;
  int sa1_dim = 64, sa2_dim = 96;
  int shared_dim = 64;
  int fc_hidden = 64;
  double range_scale = 50.0;
  std::string fusion_mode = "multiply";
  uint64_t param_seed = 1;

  // clustering
  double alpha = 2.0;
  int lidar_min_members = 5;
  int image_min_members = 50;
  int connectivity = 8;
  int background_class = 0;
  bool size_weighted_sampling = false;

  // pair generation
  double pos_threshold = 2.0;
  double neg_threshold = 20.0;
  double neg_per_pos = 1.0;
  bool allow_same_index = true;

  // training
  double learning_rate = 1e-3;
  int epochs = 35;
  int batch_size = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  bool lr_step_decay = false;
  double lr_decay_factor = 0.5;
  int lr_decay_every = 10;

  // evaluation
  double threshold = 0.5;
  bool train_enabled = true;
  bool write_plot = false;

  // synthetic generation
  int synth_sequences = 2;
  int synth_frames = 30;
  double synth_step = 1.4;
  double synth_extent = 60.0;
  int synth_image_size = 64;
  double synth_density = 3.0;
  int synth_min_points = 80;
  double synth_lidar_range = 60.0;
  double synth_focal = 48.0;

  ModelConfig model_config() const {
    ModelConfig cfg;
    cfg.num_classes = num_classes;
    cfg.capacity = capacity;
    cfg.graph.class_dim = graph_class_dim;
    cfg.graph.pos_dim = graph_pos_dim;
    cfg.graph.edge_hidden = graph_edge_hidden;
    cfg.graph.k = k;
    cfg.graph.lidar_range_scale = range_scale;
    cfg.graph.share_weights = share_graph_weights;
    cfg.encoder.class_dim = encoder_class_dim;
    cfg.encoder.global_dim = global_dim;
    cfg.encoder.map_channels = map_channels;
    cfg.encoder.conv1 = conv1;
    cfg.encoder.conv2 = conv2;
    cfg.encoder.conv3 = conv3;
    cfg.encoder.sa1_centroids = sa1_centroids;
    cfg.encoder.sa2_centroids = sa2_centroids;
    cfg.encoder.sa1_dim = sa1_dim;
    cfg.encoder.sa2_dim = sa2_dim;
    cfg.encoder.range_scale = range_scale;
    cfg.shared_dim = shared_dim;
    cfg.fc_hidden = fc_hidden;
    cfg.fusion_mode = parse_fusion_mode(fusion_mode);
    cfg.param_seed = param_seed;
    cfg.ablation = parse_ablation(ablation);
    return cfg;
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.rng_seed = seed;
    cfg.adam_beta1 = adam_beta1;
    cfg.adam_beta2 = adam_beta2;
    cfg.lr_step_decay = lr_step_decay;
    cfg.lr_decay_factor = lr_decay_factor;
    cfg.lr_decay_every = lr_decay_every;
    return cfg;
  }

  ClusterConfig lidar_cluster_config() const {
    ClusterConfig cfg;
    cfg.alpha = alpha;
    cfg.min_member_count = lidar_min_members;
    cfg.connectivity = connectivity;
    cfg.background_class = background_class;
    return cfg;
  }

  ClusterConfig image_cluster_config() const {
    ClusterConfig cfg = lidar_cluster_config();
    cfg.min_member_count = image_min_members;
    return cfg;
  }

  PrepConfig prep_config() const {
    PrepConfig prep;
    prep.lidar_cluster = lidar_cluster_config();
    prep.image_cluster = image_cluster_config();
    prep.capacity = capacity;
    prep.seed = seed;
    prep.size_weighted_sampling = size_weighted_sampling;
    return prep;
  }

  PairGenConfig pair_config(int sequence) const {
    PairGenConfig cfg;
    cfg.pos_threshold = pos_threshold;
    cfg.neg_threshold = neg_threshold;
    cfg.neg_per_pos = neg_per_pos;
    cfg.allow_same_index = allow_same_index;
    cfg.rng_seed = mix_seed(seed, 0xFA175ULL + static_cast<uint64_t>(sequence));
    return cfg;
  }

  SceneSpec scene_spec() const {
    SceneSpec spec;
    spec.rng_seed = seed;
    spec.extent = synth_extent;
    spec.image_width = synth_image_size;
    spec.image_height = synth_image_size;
    spec.point_density = synth_density;
    spec.min_points_per_object = synth_min_points;
    spec.lidar_range = synth_lidar_range;
    spec.focal = synth_focal;
    return spec;
  }

  SynthTrackConfig track_config() const {
    SynthTrackConfig cfg;
    cfg.n_sequences = synth_sequences;
    cfg.frames_per_sequence = synth_frames;
    cfg.step_length = synth_step;
    return cfg;
  }
};

}  // namespace sgm
