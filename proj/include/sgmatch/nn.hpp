#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/rng.hpp"
#include "sgmatch/tape.hpp"

namespace sgm {

// One learnable tensor with its gradient accumulator and Adam moments.
struct ParamTensor {
  std::string name;
  Mat value;
  Mat grad;
  Mat m_state;
  Mat v_state;
};

// Owns every learnable tensor of a model in deterministic registration order.
// Layers hold raw pointers into the store; the store must outlive them.
class ParamStore {
 public:
  ParamTensor& create(const std::string& name, int rows, int cols) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    auto p = std::make_unique<ParamTensor>();
    p->name = name;
    p->value = Mat::Zero(rows, cols);
    p->grad = Mat::Zero(rows, cols);
    p->m_state = Mat::Zero(rows, cols);
    p->v_state = Mat::Zero(rows, cols);
    index_[name] = items_.size();
    items_.push_back(std::move(p));
    return *items_.back();
  }

  // Uniform(-s, s) init with fan-based scale.
  ParamTensor& create_uniform(const std::string& name, int rows, int cols, double s, Rng& rng) {
    ParamTensor& p = create(name, rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) p.value(r, c) = rng.uniform(-s, s);
    }
    return p;
  }

  ParamTensor* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }

  const std::vector<std::unique_ptr<ParamTensor>>& items() const { return items_; }

  void zero_grads() {
    for (auto& p : items_) p->grad.setZero();
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& p : items_) n += static_cast<size_t>(p->value.size());
    return n;
  }

 private:
  std::vector<std::unique_ptr<ParamTensor>> items_;
  std::map<std::string, size_t> index_;
};

// Bind a parameter into a tape: forward copies the value, backward adds the
// node gradient into the tensor's accumulator. Binding the same tensor more
// than once per tape (weight sharing) sums the contributions.
inline Var bind(Tape& t, ParamTensor& p) {
  ParamTensor* ptr = &p;
  return t.make(p.value, [ptr](Tape& t, int self) { ptr->grad += t.grad_at(self); });
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam over a ParamStore.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(ParamStore& store) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& p : store.items()) {
      p->m_state = cfg_.beta1 * p->m_state + (1.0 - cfg_.beta1) * p->grad;
      p->v_state = (cfg_.beta2 * p->v_state.array() +
                    (1.0 - cfg_.beta2) * p->grad.array().square())
                       .matrix();
      p->value.array() -= cfg_.lr * (p->m_state.array() / bc1) /
                          ((p->v_state.array() / bc2).sqrt() + cfg_.eps);
    }
  }

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
};

// ---- layers -----------------------------------------------------------------

struct Linear {
  ParamTensor* w = nullptr;
  ParamTensor* b = nullptr;

  static Linear create(ParamStore& store, const std::string& name, int in, int out, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    Linear l;
    l.w = &store.create_uniform(name + ".w", out, in, s, rng);
    l.b = &store.create(name + ".b", out, 1);
    return l;
  }

  Var operator()(Tape& t, Var x) const { return linear(x, bind(t, *w), bind(t, *b)); }
};

// Two dense layers with a rectifier between; optional rectifier on the output.
struct Mlp {
  Linear l1, l2;
  bool relu_out = false;

  static Mlp create(ParamStore& store, const std::string& name, int in, int hidden, int out,
                    Rng& rng, bool relu_out = false) {
    Mlp m;
    m.l1 = Linear::create(store, name + ".l1", in, hidden, rng);
    m.l2 = Linear::create(store, name + ".l2", hidden, out, rng);
    m.relu_out = relu_out;
    return m;
  }

  Var operator()(Tape& t, Var x) const {
    Var h = relu(l1(t, x));
    Var y = l2(t, h);
    return relu_out ? relu(y) : y;
  }
};

struct Conv2d {
  ParamTensor* w = nullptr;
  ParamTensor* b = nullptr;
  int in_c = 0, out_c = 0, ksize = 3, stride = 1, pad = 1;

  static Conv2d create(ParamStore& store, const std::string& name, int in_c, int out_c, int ksize,
                       int stride, int pad, Rng& rng) {
    const int fan_in = in_c * ksize * ksize;
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + out_c));
    Conv2d c;
    c.w = &store.create_uniform(name + ".w", out_c, fan_in, s, rng);
    c.b = &store.create(name + ".b", out_c, 1);
    c.in_c = in_c;
    c.out_c = out_c;
    c.ksize = ksize;
    c.stride = stride;
    c.pad = pad;
    return c;
  }

  Var operator()(Tape& t, Var x, int h, int w_px) const {
    Conv2dSpec spec;
    spec.in_c = in_c;
    spec.out_c = out_c;
    spec.h = h;
    spec.w = w_px;
    spec.ksize = ksize;
    spec.stride = stride;
    spec.pad = pad;
    return conv2d(x, bind(t, *w), bind(t, *b), spec);
  }
};

// Learned per-id embedding rows.
struct Embedding {
  ParamTensor* table = nullptr;

  static Embedding create(ParamStore& store, const std::string& name, int count, int dim,
                          Rng& rng) {
    Embedding e;
    e.table = &store.create_uniform(name, count, dim, 0.1, rng);
    return e;
  }

  int rows() const { return static_cast<int>(table->value.rows()); }

  Var lookup(Tape& t, const std::vector<int>& ids) const {
    for (int id : ids) {
      if (id < 0 || id >= rows()) {
        throw ConfigError("class id " + std::to_string(id) + " outside embedding table of " +
                          std::to_string(rows()) + " rows");
      }
    }
    return gather_rows(bind(t, *table), ids);
  }
};

}  // namespace sgm
