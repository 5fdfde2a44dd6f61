#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/graph.hpp"
#include "sgmatch/nn.hpp"
#include "sgmatch/tape.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

struct GraphNetConfig {
  int num_classes = 8;   // valid class ids are [0, num_classes)
  int class_dim = 32;    // embedding width
  int pos_dim = 32;      // projected-position width
  int edge_hidden = 64;  // hidden width of the edge perceptrons
  int k = 5;             // neighbours per node, clamped to real_count - 1
  double lidar_range_scale = 50.0;  // meters; divides lidar positions
  bool share_weights = true;        // one set of edge/attention weights for both modalities

  int feature_dim() const { return class_dim + pos_dim; }
};

// Per-modality view of the graph branch. With weight sharing enabled both
// views alias the same embedding, edge perceptrons and attention matrix; the
// position projection is always per-modality (3-D meters vs 2-D pixels).
struct GraphBranchParams {
  Embedding class_embed;   // (num_classes + 1) rows; last row is VOID
  Linear pos_proj;
  Mlp edge1;
  Mlp edge2;
  ParamTensor* attention_m = nullptr;
};

struct GraphNetParams {
  GraphBranchParams lidar;
  GraphBranchParams image;

  static GraphNetParams create(ParamStore& store, const GraphNetConfig& cfg, Rng& rng) {
    GraphNetParams params;
    const int d = cfg.feature_dim();
    auto make_branch = [&](const std::string& prefix, int pos_in) {
      GraphBranchParams branch;
      branch.class_embed =
          Embedding::create(store, prefix + ".class_embed", cfg.num_classes + 1, cfg.class_dim, rng);
      branch.pos_proj = Linear::create(store, prefix + ".pos_proj", pos_in, cfg.pos_dim, rng);
      branch.edge1 = Mlp::create(store, prefix + ".edge1", 2 * d, cfg.edge_hidden, d, rng);
      branch.edge2 = Mlp::create(store, prefix + ".edge2", 2 * d, cfg.edge_hidden, d, rng);
      const double s = std::sqrt(6.0 / static_cast<double>(2 * d));
      branch.attention_m = &store.create_uniform(prefix + ".attention_m", d, d, s, rng);
      return branch;
    };
    if (cfg.share_weights) {
      GraphBranchParams shared = make_branch("graph", 3);
      params.lidar = shared;
      params.image = shared;
      params.image.pos_proj = Linear::create(store, "graph.pos_proj_image", 2, cfg.pos_dim, rng);
    } else {
      params.lidar = make_branch("graph.lidar", 3);
      params.image = make_branch("graph.image", 2);
    }
    return params;
  }
};

// Node features on the tape plus the real/virtual mask.
struct NodeFeatures {
  Var features;  // capacity × D
  std::vector<bool> mask;
  int real_count = 0;
};

// Concatenation of the class embedding with a linear projection of the
// normalized position. LiDAR positions are divided by the range scale,
// image centroids by the raster dimensions.
inline NodeFeatures embed_nodes(Tape& t, const SemanticGraph& graph,
                                const GraphBranchParams& params, const GraphNetConfig& cfg,
                                double image_width = 0.0, double image_height = 0.0) {
  graph.validate();
  if (graph.modality == Modality::image && (image_width <= 0.0 || image_height <= 0.0)) {
    throw ConfigError("image graphs need raster dimensions for position normalization");
  }
  std::vector<int> rows;
  rows.reserve(graph.capacity);
  for (const auto& node : graph.nodes) {
    if (node.is_virtual || node.class_id == kVoidClass) {
      rows.push_back(cfg.num_classes);  // VOID row
    } else if (node.class_id < 0 || node.class_id >= cfg.num_classes) {
      throw ConfigError("class id " + std::to_string(node.class_id) +
                        " outside the configured class set [0, " +
                        std::to_string(cfg.num_classes) + ")");
    } else {
      rows.push_back(node.class_id);
    }
  }
  Var class_part = params.class_embed.lookup(t, rows);

  const bool is_lidar = graph.modality == Modality::lidar;
  Mat positions(graph.capacity, is_lidar ? 3 : 2);
  for (int i = 0; i < graph.capacity; ++i) {
    const auto& p = graph.nodes[i].position;
    if (is_lidar) {
      positions.row(i) = (p / cfg.lidar_range_scale).transpose();
    } else {
      positions(i, 0) = p.x() / image_width;
      positions(i, 1) = p.y() / image_height;
    }
  }
  Var pos_part = params.pos_proj(t, t.constant(positions));

  NodeFeatures out;
  out.features = hcat(class_part, pos_part);
  out.real_count = graph.real_count;
  out.mask.resize(graph.capacity);
  for (int i = 0; i < graph.capacity; ++i) out.mask[i] = !graph.nodes[i].is_virtual;
  return out;
}

// k nearest real nodes per real node, by position, self excluded, ties to
// the lower index. Short neighbourhoods repeat cyclically; virtual rows (and
// a lone real node) point at themselves, which downstream masking nullifies.
inline Eigen::MatrixXi knn_neighbors(const SemanticGraph& graph, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (graph.real_count == 0) {
    throw DegenerateInputError("knn on a graph with no real nodes");
  }
  Eigen::MatrixXi neighbors(graph.capacity, k);
  for (int i = 0; i < graph.capacity; ++i) {
    if (i >= graph.real_count) {
      neighbors.row(i).setConstant(i);
      continue;
    }
    std::vector<std::pair<double, int>> order;
    order.reserve(graph.real_count - 1);
    for (int j = 0; j < graph.real_count; ++j) {
      if (j == i) continue;
      order.emplace_back((graph.nodes[j].position - graph.nodes[i].position).norm(), j);
    }
    std::sort(order.begin(), order.end());
    if (order.empty()) {
      neighbors.row(i).setConstant(i);
      continue;
    }
    for (int slot = 0; slot < k; ++slot) {
      neighbors(i, slot) = order[slot % order.size()].second;
    }
  }
  return neighbors;
}

// One EdgeConv layer: per real node, the element-wise max over its
// neighbours of a two-layer perceptron applied to [f_i, f_i - f_j]. Edges
// exist only between real nodes, so virtual rows come out exactly zero and
// every real row is bit-independent of the padding amount.
inline NodeFeatures edgeconv(Tape& t, const NodeFeatures& input,
                             const Eigen::MatrixXi& neighbors, const Mlp& theta) {
  const int capacity = static_cast<int>(input.mask.size());
  const int real = input.real_count;
  const int k = static_cast<int>(neighbors.cols());
  std::vector<int> centers(static_cast<size_t>(real) * k);
  std::vector<int> nbrs(static_cast<size_t>(real) * k);
  std::vector<std::vector<int>> groups(capacity);  // virtual groups stay empty
  for (int i = 0; i < real; ++i) {
    groups[i].reserve(k);
    for (int s = 0; s < k; ++s) {
      const int e = i * k + s;
      centers[e] = i;
      nbrs[e] = neighbors(i, s);
      groups[i].push_back(e);
    }
  }
  Var center_f = gather_rows(input.features, centers);
  Var nbr_f = gather_rows(input.features, nbrs);
  Var edge_in = hcat(center_f, sub(center_f, nbr_f));
  Var edge_out = theta(t, edge_in);

  NodeFeatures out;
  out.features = group_max(edge_out, groups);
  out.mask = input.mask;
  out.real_count = input.real_count;
  return out;
}

struct AttentionPooled {
  Var global_context;  // 1 × D, mean of n_i M over real nodes
  Var att_scores;      // capacity × 1, sigmoid(n_i . tanh(context))
  Var f_whole;         // 1 × D, sum of att_i n_i over real nodes
  bool degenerate = false;  // no real nodes: zeros, flagged
};

// Whole-graph readout: a learnable matrix shapes the mean context, each node
// is scored against the squashed context, and the readout is the
// score-weighted sum. Only the real-row prefix enters the reductions, so the
// result is bit-identical under any amount of virtual padding.
inline AttentionPooled attention_pool(Tape& t, const NodeFeatures& input, Var attention_m) {
  const int capacity = static_cast<int>(input.mask.size());
  const int real = input.real_count;
  const int d = static_cast<int>(t.value(input.features).cols());
  if (t.value(attention_m).rows() != d || t.value(attention_m).cols() != d) {
    throw ConfigError("attention matrix must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  for (int i = 0; i < capacity; ++i) {
    if (input.mask[i] != (i < real)) {
      throw ConfigError("real nodes must occupy the leading slots");
    }
  }
  AttentionPooled out;
  out.degenerate = real == 0;
  if (out.degenerate) {
    out.global_context = t.constant(Mat::Zero(1, d));
    Var logits = matmul(input.features, transpose(tanh_op(out.global_context)));
    out.att_scores = sigmoid_op(logits);
    out.f_whole = t.constant(Mat::Zero(1, d));
    return out;
  }

  Var real_rows = block(input.features, 0, 0, real, d);
  Var projected = matmul(real_rows, attention_m);  // real × D
  out.global_context =
      matmul(t.constant(Mat::Constant(1, real, 1.0 / real)), projected);  // 1 × D
  Var squashed = tanh_op(out.global_context);
  Var logits = matmul(input.features, transpose(squashed));  // capacity × 1
  out.att_scores = sigmoid_op(logits);
  Var att_real = block(out.att_scores, 0, 0, real, 1);
  out.f_whole = matmul(transpose(att_real), real_rows);  // 1 × D
  return out;
}

// Full branch: embed, wire neighbours once from positions, two stacked
// EdgeConv layers, attention readout.
inline AttentionPooled graph_branch_forward(Tape& t, const SemanticGraph& graph,
                                            const GraphBranchParams& params,
                                            const GraphNetConfig& cfg, double image_width = 0.0,
                                            double image_height = 0.0) {
  NodeFeatures f0 = embed_nodes(t, graph, params, cfg, image_width, image_height);
  if (graph.real_count == 0) {
    // nothing to convolve; the pool flags the degenerate case and yields zeros
    return attention_pool(t, f0, bind(t, *params.attention_m));
  }
  const int k = std::max(1, std::min(cfg.k, std::max(1, graph.real_count - 1)));
  const Eigen::MatrixXi neighbors = knn_neighbors(graph, k);
  NodeFeatures f1 = edgeconv(t, f0, neighbors, params.edge1);
  NodeFeatures f2 = edgeconv(t, f1, neighbors, params.edge2);
  return attention_pool(t, f2, bind(t, *params.attention_m));
}

}  // namespace sgm
