#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace sgm {

using Mat = Eigen::MatrixXd;

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape owns the forward graph of one evaluation. Operations append nodes
// and capture a pullback; backward(loss) seeds d(loss)=1 and walks the nodes
// in reverse creation order, accumulating each node's grad into its parents.
// Leaves created via Tape::leaf carry gradients the caller reads back
// (parameter binding lives in nn.hpp); constants are leaves whose gradient
// is never consumed. Var is a trivially copyable handle.
class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

class Tape {
 public:
  // Pullback receives the tape and the id of its own node, giving access to
  // both the node's output value and its accumulated gradient.
  using Pullback = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat(), nullptr});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  Var constant(Mat value) { return leaf(std::move(value)); }

  Var make(Mat value, Pullback back) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& value(int id) const { return nodes_[id].value; }

  // Gradient buffer, zero-initialized on first touch.
  Mat& grad(Var v) { return grad_at(v.id); }

  Mat& grad_at(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Var loss) {
    assert(loss.tape == this);
    assert(value(loss).rows() == 1 && value(loss).cols() == 1);
    grad(loss).setConstant(1.0);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back && n.grad.size() != 0) n.back(*this, i);
    }
  }

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Pullback back;
  };
  std::vector<Node> nodes_;
};

// ---- operations -------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const int ai = a.id, bi = b.id;
  return t.make(t.value(a) * t.value(b), [ai, bi](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy * t.value(bi).transpose();
    t.grad_at(bi) += t.value(ai).transpose() * gy;
  });
}

inline Var transpose(Var a) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).transpose(), [ai](Tape& t, int self) {
    t.grad_at(ai) += t.grad_at(self).transpose();
  });
}

inline Var add(Var a, Var b) {
  Tape& t = *a.tape;
  const int ai = a.id, bi = b.id;
  return t.make(t.value(a) + t.value(b), [ai, bi](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy;
    t.grad_at(bi) += gy;
  });
}

inline Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  const int ai = a.id, bi = b.id;
  return t.make(t.value(a) - t.value(b), [ai, bi](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy;
    t.grad_at(bi) -= gy;
  });
}

// Hadamard product.
inline Var cmul(Var a, Var b) {
  Tape& t = *a.tape;
  const int ai = a.id, bi = b.id;
  return t.make(t.value(a).cwiseProduct(t.value(b)), [ai, bi](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy.cwiseProduct(t.value(bi));
    t.grad_at(bi) += gy.cwiseProduct(t.value(ai));
  });
}

// k*a + c, elementwise.
inline Var affine(Var a, double k, double c) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make((k * t.value(a).array() + c).matrix(), [ai, k](Tape& t, int self) {
    t.grad_at(ai) += k * t.grad_at(self);
  });
}

inline Var scale(Var a, double k) { return affine(a, k, 0.0); }

inline Var relu(Var a) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).cwiseMax(0.0), [ai](Tape& t, int self) {
    const Mat mask = (t.value(ai).array() > 0.0).cast<double>().matrix();
    t.grad_at(ai) += t.grad_at(self).cwiseProduct(mask);
  });
}

inline Var tanh_op(Var a) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).array().tanh().matrix(), [ai](Tape& t, int self) {
    const Mat& y = t.value(self);
    t.grad_at(ai) += t.grad_at(self).cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

inline Var sigmoid_op(Var a) {
  Tape& t = *a.tape;
  Mat y = (1.0 / (1.0 + (-t.value(a).array()).exp())).matrix();
  const int ai = a.id;
  return t.make(std::move(y), [ai](Tape& t, int self) {
    const Mat& y = t.value(self);
    t.grad_at(ai) += t.grad_at(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix());
  });
}

inline Var log_op(Var a) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).array().log().matrix(), [ai](Tape& t, int self) {
    t.grad_at(ai) += t.grad_at(self).cwiseQuotient(t.value(ai));
  });
}

// Clamp to [lo, hi]; gradient passes only through the interior.
inline Var clamp_op(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).cwiseMax(lo).cwiseMin(hi), [ai, lo, hi](Tape& t, int self) {
    const auto& x = t.value(ai).array();
    const Mat mask = ((x > lo) && (x < hi)).cast<double>().matrix();
    t.grad_at(ai) += t.grad_at(self).cwiseProduct(mask);
  });
}

// Column-wise concatenation [a | b].
inline Var hcat(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& va = t.value(a);
  const Mat& vb = t.value(b);
  assert(va.rows() == vb.rows());
  Mat y(va.rows(), va.cols() + vb.cols());
  y << va, vb;
  const int ai = a.id, bi = b.id;
  const int ca = static_cast<int>(va.cols());
  return t.make(std::move(y), [ai, bi, ca](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy.leftCols(ca);
    t.grad_at(bi) += gy.rightCols(gy.cols() - ca);
  });
}

inline Var vcat(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& va = t.value(a);
  const Mat& vb = t.value(b);
  assert(va.cols() == vb.cols());
  Mat y(va.rows() + vb.rows(), va.cols());
  y << va, vb;
  const int ai = a.id, bi = b.id;
  const int ra = static_cast<int>(va.rows());
  return t.make(std::move(y), [ai, bi, ra](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(ai) += gy.topRows(ra);
    t.grad_at(bi) += gy.bottomRows(gy.rows() - ra);
  });
}

inline Var block(Var a, int r0, int c0, int nr, int nc) {
  Tape& t = *a.tape;
  const int ai = a.id;
  return t.make(t.value(a).block(r0, c0, nr, nc), [ai, r0, c0, nr, nc](Tape& t, int self) {
    t.grad_at(ai).block(r0, c0, nr, nc) += t.grad_at(self);
  });
}

// Row gather: out.row(r) = a.row(idx[r]). Indices may repeat.
inline Var gather_rows(Var a, std::vector<int> idx) {
  Tape& t = *a.tape;
  const Mat& va = t.value(a);
  Mat y(static_cast<int>(idx.size()), va.cols());
  for (size_t r = 0; r < idx.size(); ++r) y.row(static_cast<int>(r)) = va.row(idx[r]);
  const int ai = a.id;
  auto shared = std::make_shared<std::vector<int>>(std::move(idx));
  return t.make(std::move(y), [ai, shared](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    Mat& ga = t.grad_at(ai);
    for (size_t r = 0; r < shared->size(); ++r) {
      ga.row((*shared)[r]) += gy.row(static_cast<int>(r));
    }
  });
}

// Per-group column-wise max over subsets of rows. Empty groups yield zero
// rows (and propagate no gradient). Ties pick the first row in group order.
inline Var group_max(Var a, const std::vector<std::vector<int>>& groups) {
  Tape& t = *a.tape;
  const Mat& va = t.value(a);
  const int g_count = static_cast<int>(groups.size());
  const int cols = static_cast<int>(va.cols());
  Mat y = Mat::Zero(g_count, cols);
  auto argmax = std::make_shared<Eigen::MatrixXi>(Eigen::MatrixXi::Constant(g_count, cols, -1));
  for (int g = 0; g < g_count; ++g) {
    const auto& members = groups[g];
    if (members.empty()) continue;
    for (int c = 0; c < cols; ++c) {
      int best_row = members[0];
      double best = va(members[0], c);
      for (size_t m = 1; m < members.size(); ++m) {
        const double candidate = va(members[m], c);
        if (candidate > best) {
          best = candidate;
          best_row = members[m];
        }
      }
      y(g, c) = best;
      (*argmax)(g, c) = best_row;
    }
  }
  const int ai = a.id;
  return t.make(std::move(y), [ai, argmax](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    Mat& ga = t.grad_at(ai);
    for (int g = 0; g < argmax->rows(); ++g) {
      for (int c = 0; c < argmax->cols(); ++c) {
        const int src = (*argmax)(g, c);
        if (src >= 0) ga(src, c) += gy(g, c);
      }
    }
  });
}

// Dense layer on row-vectors: x (N×in), w (out×in), b (out×1) -> N×out.
inline Var linear(Var x, Var w, Var b) {
  Tape& t = *x.tape;
  Mat y = t.value(x) * t.value(w).transpose();
  y.rowwise() += t.value(b).col(0).transpose();
  const int xi = x.id, wi = w.id, bi = b.id;
  return t.make(std::move(y), [xi, wi, bi](Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(xi) += gy * t.value(wi);
    t.grad_at(wi) += gy.transpose() * t.value(xi);
    t.grad_at(bi) += gy.colwise().sum().transpose();
  });
}

// Row-wise softmax.
inline Var softmax_row(Var a) {
  Tape& t = *a.tape;
  const Mat& va = t.value(a);
  Mat y(va.rows(), va.cols());
  for (int r = 0; r < va.rows(); ++r) {
    const double mx = va.row(r).maxCoeff();
    Eigen::ArrayXd e = (va.row(r).array() - mx).exp();
    y.row(r) = (e / e.sum()).matrix();
  }
  const int ai = a.id;
  return t.make(std::move(y), [ai](Tape& t, int self) {
    const Mat& y = t.value(self);
    const Mat& gy = t.grad_at(self);
    Mat& ga = t.grad_at(ai);
    for (int r = 0; r < y.rows(); ++r) {
      const double dot = gy.row(r).dot(y.row(r));
      ga.row(r) += ((gy.row(r).array() - dot) * y.row(r).array()).matrix();
    }
  });
}

inline Var sum_all(Var a) {
  Tape& t = *a.tape;
  Mat y(1, 1);
  y(0, 0) = t.value(a).sum();
  const int ai = a.id;
  return t.make(std::move(y), [ai](Tape& t, int self) {
    t.grad_at(ai).array() += t.grad_at(self)(0, 0);
  });
}

// ---- 2-D convolution ---------------------------------------------------------
//
// Feature maps are stored channels-as-rows: a C×(H·W) matrix whose row c is
// the row-major flattening of channel c.

struct Conv2dSpec {
  int in_c = 0;
  int out_c = 0;
  int h = 0;
  int w = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;

  int out_h() const { return (h + 2 * pad - ksize) / stride + 1; }
  int out_w() const { return (w + 2 * pad - ksize) / stride + 1; }
};

// Patch-gather index map: entry (kr, oc) is the flat source index in the
// input map feeding patch-row kr at output position oc. Taps outside the
// raster clamp to the nearest edge pixel (replicate padding), which keeps a
// spatially constant input spatially constant through the stack.
inline std::vector<int> conv_index_map(const Conv2dSpec& s) {
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<int> map(static_cast<size_t>(s.in_c * s.ksize * s.ksize) * oh * ow, -1);
  const int out_cols = oh * ow;
  for (int c = 0; c < s.in_c; ++c) {
    for (int ky = 0; ky < s.ksize; ++ky) {
      for (int kx = 0; kx < s.ksize; ++kx) {
        const int patch_row = (c * s.ksize + ky) * s.ksize + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int sy = std::clamp(oy * s.stride + ky - s.pad, 0, s.h - 1);
          for (int ox = 0; ox < ow; ++ox) {
            const int sx = std::clamp(ox * s.stride + kx - s.pad, 0, s.w - 1);
            map[static_cast<size_t>(patch_row) * out_cols + oy * ow + ox] =
                c * (s.h * s.w) + sy * s.w + sx;
          }
        }
      }
    }
  }
  return map;
}

// x: in_c×(h·w), w: out_c×(in_c·k²), b: out_c×1 -> out_c×(out_h·out_w).
inline Var conv2d(Var x, Var w, Var b, const Conv2dSpec& spec) {
  Tape& t = *x.tape;
  const Mat& vx = t.value(x);
  assert(vx.rows() == spec.in_c && vx.cols() == spec.h * spec.w);
  const int patch_rows = spec.in_c * spec.ksize * spec.ksize;
  assert(t.value(w).rows() == spec.out_c && t.value(w).cols() == patch_rows);
  const int out_cols = spec.out_h() * spec.out_w();
  auto map = std::make_shared<std::vector<int>>(conv_index_map(spec));

  auto patches = std::make_shared<Mat>(Mat::Zero(patch_rows, out_cols));
  const int plane_px = spec.h * spec.w;
  for (int pr = 0; pr < patch_rows; ++pr) {
    for (int oc = 0; oc < out_cols; ++oc) {
      const int flat = (*map)[static_cast<size_t>(pr) * out_cols + oc];
      if (flat >= 0) (*patches)(pr, oc) = vx(flat / plane_px, flat % plane_px);
    }
  }

  Mat y = t.value(w) * (*patches);
  y.colwise() += t.value(b).col(0);
  const int xi = x.id, wi = w.id, bi = b.id;
  const int plane = spec.h * spec.w;
  return t.make(std::move(y), [xi, wi, bi, map, patches, patch_rows, out_cols, plane](
                                  Tape& t, int self) {
    const Mat& gy = t.grad_at(self);
    t.grad_at(wi) += gy * patches->transpose();
    t.grad_at(bi) += gy.rowwise().sum();
    const Mat gp = t.value(wi).transpose() * gy;
    Mat& gx = t.grad_at(xi);
    for (int pr = 0; pr < patch_rows; ++pr) {
      for (int oc = 0; oc < out_cols; ++oc) {
        const int flat = (*map)[static_cast<size_t>(pr) * out_cols + oc];
        if (flat >= 0) gx(flat / plane, flat % plane) += gp(pr, oc);
      }
    }
  });
}

}  // namespace sgm
