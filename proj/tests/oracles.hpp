#pragma once

// Test-only oracles, kept independent of the implementation paths they check:
//  - central finite differences for every analytic gradient,
//  - O(N^2) transitive-closure clustering reference,
//  - straight-line transcription of the attention-pooling equations.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "sgmatch/nn.hpp"
#include "sgmatch/types.hpp"

namespace sgm::testing {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  int checked = 0;
};

// Central finite differences against the analytic gradients currently stored
// in `store` (caller runs forward+backward first). `forward` must recompute
// the scalar loss from the store's current values. Checks every entry of
// every tensor unless `max_entries_per_tensor` > 0, in which case a strided
// subset is used.
inline GradCheckReport finite_diff_check(ParamStore& store,
                                         const std::function<double()>& forward,
                                         double step = 1e-4,
                                         int max_entries_per_tensor = 0) {
  GradCheckReport report;
  for (const auto& p : store.items()) {
    const int n = static_cast<int>(p->value.size());
    int stride = 1;
    if (max_entries_per_tensor > 0 && n > max_entries_per_tensor) {
      stride = (n + max_entries_per_tensor - 1) / max_entries_per_tensor;
    }
    for (int i = 0; i < n; i += stride) {
      double* x = p->value.data() + i;
      const double saved = *x;
      *x = saved + step;
      const double f_plus = forward();
      *x = saved - step;
      const double f_minus = forward();
      *x = saved;
      const double fd = (f_plus - f_minus) / (2.0 * step);
      const double analytic = p->grad.data()[i];
      const double rel =
          std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-4});
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_tensor = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

// Brute-force reference for distance-adaptive clustering: per class, link
// p_i ~ p_j whenever dist <= alpha * nn_dist(i) or dist <= alpha * nn_dist(j),
// then take the transitive closure. Ids are dense, ordered by first point.
inline std::vector<int> brute_force_cluster(const LabeledPointCloud& cloud, double alpha) {
  const int n = static_cast<int>(cloud.size());
  std::vector<int> instance(n, -1);
  std::vector<int> classes;
  for (int label : cloud.labels) {
    if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
      classes.push_back(label);
    }
  }
  int next_id_base = 0;
  std::vector<int> closure(n, -1);
  for (int cls : classes) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (cloud.labels[i] == cls) members.push_back(i);
    }
    const int m = static_cast<int>(members.size());
    if (m == 1) {
      closure[members[0]] = next_id_base++;
      continue;
    }
    Eigen::MatrixXd dist(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        dist(a, b) = (cloud.points[members[a]] - cloud.points[members[b]]).norm();
      }
    }
    std::vector<double> radius(m);
    for (int a = 0; a < m; ++a) {
      double nn = std::numeric_limits<double>::infinity();
      for (int b = 0; b < m; ++b) {
        if (b != a) nn = std::min(nn, dist(a, b));
      }
      radius[a] = alpha * nn;
    }
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> link(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        link(a, b) = dist(a, b) <= radius[a] || dist(a, b) <= radius[b];
      }
    }
    // transitive closure of the symmetric link relation: breadth-first
    // components over the full pairwise matrix
    std::vector<int> comp(m, -1);
    std::vector<int> queue;
    for (int a = 0; a < m; ++a) {
      if (comp[a] >= 0) continue;
      const int id = next_id_base++;
      comp[a] = id;
      queue.assign(1, a);
      while (!queue.empty()) {
        const int at = queue.back();
        queue.pop_back();
        for (int b = 0; b < m; ++b) {
          if (comp[b] < 0 && link(at, b)) {
            comp[b] = id;
            queue.push_back(b);
          }
        }
      }
    }
    for (int a = 0; a < m; ++a) closure[members[a]] = comp[a];
  }
  // renumber densely by first occurrence over the original point order
  std::vector<int> remap;
  for (int i = 0; i < n; ++i) {
    const int raw = closure[i];
    int found = -1;
    for (size_t r = 0; r < remap.size(); ++r) {
      if (remap[r] == raw) {
        found = static_cast<int>(r);
        break;
      }
    }
    if (found < 0) {
      remap.push_back(raw);
      found = static_cast<int>(remap.size()) - 1;
    }
    instance[i] = found;
  }
  return instance;
}

// Straight-line transcription of the attention pooling equations on plain
// arrays: g = mean_i(n_i M); att_i = sigmoid(n_i . tanh(g)); F = sum att_i n_i.
struct AttentionRef {
  Eigen::VectorXd g;
  Eigen::VectorXd att;
  Eigen::VectorXd f_whole;
};

inline AttentionRef attention_pool_reference(const Eigen::MatrixXd& node_features,
                                             const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(node_features.rows());
  const int d = static_cast<int>(node_features.cols());
  AttentionRef ref;
  ref.g = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    ref.g += (node_features.row(i) * m).transpose();
  }
  ref.g /= static_cast<double>(n);
  Eigen::VectorXd tg = ref.g.array().tanh();
  ref.att = Eigen::VectorXd::Zero(n);
  ref.f_whole = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    const double score = 1.0 / (1.0 + std::exp(-node_features.row(i).dot(tg)));
    ref.att(i) = score;
    ref.f_whole += score * node_features.row(i).transpose();
  }
  return ref;
}

}  // namespace sgm::testing
