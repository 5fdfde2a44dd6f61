#pragma once

#include <string>

#include "sgmatch/error.hpp"
#include "sgmatch/nn.hpp"
#include "sgmatch/tape.hpp"

namespace sgm {

enum class FusionMode { multiply, add };

inline FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "multiply") return FusionMode::multiply;
  if (s == "add") return FusionMode::add;
  throw ConfigError("unknown fusion mode '" + s + "' (multiply|add)");
}

struct FusionParams {
  Linear gate;  // concat(F_p, F_i) -> one logit per feature-map channel

  static FusionParams create(ParamStore& store, int global_dim, int map_channels, Rng& rng) {
    FusionParams f;
    f.gate = Linear::create(store, "fusion.gate", 2 * global_dim, map_channels, rng);
    return f;
  }
};

struct Fused {
  Var gates;     // 1 × map_channels, sigmoid, in (0, 1)
  Var weighted;  // 1 × map_channels (F_wi)
};

// Channel attention over the image feature map: the gate comes from the two
// global features, the map is pooled spatially, and the gate is applied
// multiplicatively (default) or additively.
inline Fused attention_fuse(Tape& t, Var point_global, Var image_global, Var feature_map,
                            const FusionParams& params, FusionMode mode) {
  const int map_channels = static_cast<int>(t.value(feature_map).rows());
  const int grid = static_cast<int>(t.value(feature_map).cols());
  Var gate_in = hcat(point_global, image_global);
  Fused out;
  out.gates = sigmoid_op(params.gate(t, gate_in));  // 1 × map_channels
  if (t.value(out.gates).cols() != map_channels) {
    throw ConfigError("fusion gate width " + std::to_string(t.value(out.gates).cols()) +
                      " does not match feature map channels " + std::to_string(map_channels));
  }
  Var pooled = transpose(matmul(feature_map, t.constant(Mat::Constant(grid, 1, 1.0 / grid))));
  out.weighted = mode == FusionMode::multiply ? cmul(out.gates, pooled) : add(out.gates, pooled);
  return out;
}

// ---- classification head --------------------------------------------------------

struct HeadParams {
  Linear adapt_weighted;     // F_wi -> shared width
  Linear adapt_point;        // F_p -> shared width
  Linear adapt_graph_image;  // image-graph readout -> shared width
  Linear adapt_graph_lidar;  // lidar-graph readout -> shared width
  Mlp shared;                // the same perceptron applied to every branch
  Linear fc1;
  Linear fc2;  // 2 logits

  static HeadParams create(ParamStore& store, int map_channels, int global_dim, int graph_dim,
                           int shared_dim, int fc_hidden, Rng& rng) {
    HeadParams h;
    h.adapt_weighted = Linear::create(store, "head.adapt_weighted", map_channels, shared_dim, rng);
    h.adapt_point = Linear::create(store, "head.adapt_point", global_dim, shared_dim, rng);
    h.adapt_graph_image =
        Linear::create(store, "head.adapt_graph_image", graph_dim, shared_dim, rng);
    h.adapt_graph_lidar =
        Linear::create(store, "head.adapt_graph_lidar", graph_dim, shared_dim, rng);
    h.shared = Mlp::create(store, "head.shared", shared_dim, shared_dim, shared_dim, rng,
                           /*relu_out=*/true);
    h.fc1 = Linear::create(store, "head.fc1", 4 * shared_dim, fc_hidden, rng);
    h.fc2 = Linear::create(store, "head.fc2", fc_hidden, 2, rng);
    return h;
  }
};

struct HeadOutput {
  Var logits;      // 1 × 2
  Var match_prob;  // 1 × 1, softmax probability of the match class
};

// Every branch feature passes through the same shared perceptron (after a
// per-branch width adapter), the results are concatenated, and a small
// fully-connected stack produces the two-class logits.
inline HeadOutput classify_head(Tape& t, Var weighted_image, Var point_global, Var graph_image,
                                Var graph_lidar, const HeadParams& params) {
  Var b1 = params.shared(t, params.adapt_weighted(t, weighted_image));
  Var b2 = params.shared(t, params.adapt_point(t, point_global));
  Var b3 = params.shared(t, params.adapt_graph_image(t, graph_image));
  Var b4 = params.shared(t, params.adapt_graph_lidar(t, graph_lidar));
  Var joined = hcat(hcat(b1, b2), hcat(b3, b4));
  Var hidden = relu(params.fc1(t, joined));
  HeadOutput out;
  out.logits = params.fc2(t, hidden);
  Var probs = softmax_row(out.logits);
  out.match_prob = block(probs, 0, 1, 1, 1);
  return out;
}

// Two-class cross-entropy on the match probability, clamped away from the
// log singularities.
inline constexpr double kBceEpsilon = 1e-7;

inline Var bce_loss(Tape& t, Var match_prob, int label) {
  if (label != 0 && label != 1) {
    throw ConfigError("label must be 0 or 1, got " + std::to_string(label));
  }
  Var q = clamp_op(match_prob, kBceEpsilon, 1.0 - kBceEpsilon);
  Var q_neg = clamp_op(affine(match_prob, -1.0, 1.0), kBceEpsilon, 1.0 - kBceEpsilon);
  const double p = label;
  Var loss = add(scale(log_op(q), -p), scale(log_op(q_neg), -(1.0 - p)));
  return loss;
}

}  // namespace sgm
