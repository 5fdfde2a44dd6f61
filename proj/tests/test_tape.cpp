#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "sgmatch/nn.hpp"
#include "sgmatch/tape.hpp"

using namespace sgm;

TEST_CASE("elementwise and matmul forward values") {
  Tape t;
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, -1, 2;
  Var va = t.leaf(a), vb = t.leaf(b);
  CHECK(t.value(matmul(va, vb))(0, 0) == Catch::Approx(-2.0));
  CHECK(t.value(add(va, vb))(1, 0) == Catch::Approx(2.0));
  CHECK(t.value(cmul(va, vb))(1, 1) == Catch::Approx(8.0));
  CHECK(t.value(relu(sub(vb, va)))(0, 0) == Catch::Approx(0.0));
  CHECK(t.value(affine(va, 2.0, 1.0))(0, 1) == Catch::Approx(5.0));
}

TEST_CASE("softmax rows normalize") {
  Tape t;
  Mat a(2, 3);
  a << 1, 2, 3, -5, 0, 5;
  Var y = softmax_row(t.leaf(a));
  CHECK(t.value(y).row(0).sum() == Catch::Approx(1.0));
  CHECK(t.value(y).row(1).sum() == Catch::Approx(1.0));
  CHECK(t.value(y)(0, 2) > t.value(y)(0, 0));
}

TEST_CASE("group_max picks per-column maxima and zero for empty groups") {
  Tape t;
  Mat a(4, 2);
  a << 1, -1, 3, -4, 2, 0, 5, -9;
  Var v = t.leaf(a);
  Var y = group_max(v, {{0, 1, 2}, {}, {3}});
  CHECK(t.value(y)(0, 0) == Catch::Approx(3.0));
  CHECK(t.value(y)(0, 1) == Catch::Approx(0.0));
  CHECK(t.value(y)(1, 0) == Catch::Approx(0.0));
  CHECK(t.value(y)(2, 1) == Catch::Approx(-9.0));
}

TEST_CASE("conv2d matches a hand computation on a 1x1 kernel") {
  // 1x1 kernel, one input channel: pure per-pixel scaling plus bias.
  Tape t;
  Mat x(1, 4);
  x << 1, 2, 3, 4;  // 2x2 image
  Mat w(1, 1), b(1, 1);
  w << 3;
  b << -1;
  Conv2dSpec spec{1, 1, 2, 2, 1, 1, 0};
  Var y = conv2d(t.leaf(x), t.leaf(w), t.leaf(b), spec);
  CHECK(t.value(y)(0, 0) == Catch::Approx(2.0));
  CHECK(t.value(y)(0, 3) == Catch::Approx(11.0));
}

TEST_CASE("conv2d stride-2 3x3 output geometry") {
  Conv2dSpec spec{3, 8, 16, 16, 3, 2, 1};
  CHECK(spec.out_h() == 8);
  CHECK(spec.out_w() == 8);
}

namespace {

// A gauntlet through every op; returns the scalar loss from current params.
double gauntlet_forward(ParamStore& store) {
  Tape t;
  Var w1 = bind(t, *store.find("w1"));
  Var w2 = bind(t, *store.find("w2"));
  Var b1 = bind(t, *store.find("b1"));
  Var table = bind(t, *store.find("table"));
  Var cw = bind(t, *store.find("cw"));
  Var cb = bind(t, *store.find("cb"));

  Mat x0(3, 4);
  x0 << 0.5, -0.2, 0.3, 0.9, 1.0, 0.4, -0.6, 0.1, -0.3, 0.8, 0.2, -0.5;
  Var x = t.constant(x0);

  Var h = linear(x, w1, b1);              // 3x5
  h = relu(h);
  Var g = gather_rows(table, {2, 0, 1});  // 3x5
  Var mixed = cmul(h, g);
  Var cat = hcat(mixed, tanh_op(h));      // 3x10
  Var top = group_max(cat, {{0, 1}, {2}});  // 2x10
  Var tr = transpose(matmul(top, transpose(w2)));  // w2: 4x10 -> top*w2^T: 2x4 -> 4x2
  Var sq = cmul(tr, tr);
  Var sig = sigmoid_op(block(sq, 0, 0, 4, 1));  // 4x1

  // conv path: interpret table row as a 1-channel 1x5 image
  Conv2dSpec spec{1, 2, 1, 5, 3, 1, 1};
  Var img = block(table, 0, 0, 1, 5);
  Var conv = conv2d(img, cw, cb, spec);  // 2x5
  Var pooled = matmul(conv, t.constant(Mat::Constant(5, 1, 0.2)));  // 2x1

  Var joined = vcat(sig, pooled);  // 6x1
  Var probs = softmax_row(transpose(joined));
  Var picked = clamp_op(block(probs, 0, 1, 1, 2), 1e-7, 1.0 - 1e-7);
  Var loss = sum_all(cmul(log_op(picked), t.constant(Mat::Constant(1, 2, -0.5))));
  return t.value(loss)(0, 0);
}

}  // namespace

TEST_CASE("finite differences validate every tape op") {
  Rng rng(42);
  ParamStore store;
  store.create_uniform("w1", 5, 4, 0.6, rng);
  store.create_uniform("w2", 4, 10, 0.6, rng);
  store.create_uniform("b1", 5, 1, 0.6, rng);
  store.create_uniform("table", 4, 5, 0.6, rng);
  store.create_uniform("cw", 2, 9, 0.6, rng);
  store.create_uniform("cb", 2, 1, 0.6, rng);

  // analytic pass
  store.zero_grads();
  {
    Tape t;
    Var w1 = bind(t, *store.find("w1"));
    Var w2 = bind(t, *store.find("w2"));
    Var b1 = bind(t, *store.find("b1"));
    Var table = bind(t, *store.find("table"));
    Var cw = bind(t, *store.find("cw"));
    Var cb = bind(t, *store.find("cb"));

    Mat x0(3, 4);
    x0 << 0.5, -0.2, 0.3, 0.9, 1.0, 0.4, -0.6, 0.1, -0.3, 0.8, 0.2, -0.5;
    Var x = t.constant(x0);
    Var h = linear(x, w1, b1);
    h = relu(h);
    Var g = gather_rows(table, {2, 0, 1});
    Var mixed = cmul(h, g);
    Var cat = hcat(mixed, tanh_op(h));
    Var top = group_max(cat, {{0, 1}, {2}});
    Var tr = transpose(matmul(top, transpose(w2)));
    Var sq = cmul(tr, tr);
    Var sig = sigmoid_op(block(sq, 0, 0, 4, 1));
    Conv2dSpec spec{1, 2, 1, 5, 3, 1, 1};
    Var img = block(table, 0, 0, 1, 5);
    Var conv = conv2d(img, cw, cb, spec);
    Var pooled = matmul(conv, t.constant(Mat::Constant(5, 1, 0.2)));
    Var joined = vcat(sig, pooled);
    Var probs = softmax_row(transpose(joined));
    Var picked = clamp_op(block(probs, 0, 1, 1, 2), 1e-7, 1.0 - 1e-7);
    Var loss = sum_all(cmul(log_op(picked), t.constant(Mat::Constant(1, 2, -0.5))));
    t.backward(loss);
  }

  auto report = sgm::testing::finite_diff_check(
      store, [&]() { return gauntlet_forward(store); });
  INFO("worst: " << report.worst_tensor);
  CHECK(report.checked > 100);
  CHECK(report.max_rel_err <= 1e-3);
}

TEST_CASE("weight sharing accumulates gradients from every application") {
  Rng rng(7);
  ParamStore store;
  Linear shared = Linear::create(store, "shared", 3, 3, rng);

  auto forward = [&]() {
    Tape t;
    Mat x0(2, 3);
    x0 << 0.1, -0.4, 0.7, 0.3, 0.9, -0.2;
    Var x = t.constant(x0);
    Var once = relu(shared(t, x));
    Var twice = shared(t, once);  // same weights applied again
    return t.value(sum_all(cmul(twice, twice)))(0, 0);
  };

  store.zero_grads();
  {
    Tape t;
    Mat x0(2, 3);
    x0 << 0.1, -0.4, 0.7, 0.3, 0.9, -0.2;
    Var x = t.constant(x0);
    Var once = relu(shared(t, x));
    Var twice = shared(t, once);
    t.backward(sum_all(cmul(twice, twice)));
  }
  auto report = sgm::testing::finite_diff_check(store, forward);
  CHECK(report.max_rel_err <= 1e-3);
}

TEST_CASE("adam reduces a quadratic") {
  Rng rng(3);
  ParamStore store;
  ParamTensor& p = store.create_uniform("p", 4, 1, 2.0, rng);
  Adam adam(AdamConfig{0.05});
  double first = p.value.squaredNorm();
  for (int it = 0; it < 400; ++it) {
    store.zero_grads();
    Tape t;
    Var v = bind(t, p);
    Var loss = sum_all(cmul(v, v));
    t.backward(loss);
    adam.step(store);
  }
  CHECK(p.value.squaredNorm() < 1e-4 * first + 1e-8);
}
