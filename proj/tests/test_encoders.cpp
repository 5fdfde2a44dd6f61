#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "sgmatch/encoders.hpp"
#include "sgmatch/rng.hpp"

using namespace sgm;

namespace {

EncoderConfig toy_encoder() {
  EncoderConfig cfg;
  cfg.num_classes = 4;
  cfg.class_dim = 3;
  cfg.global_dim = 6;
  cfg.sa1_centroids = 4;
  cfg.sa1_radius = 4.0;
  cfg.sa1_group = 6;
  cfg.sa1_dim = 5;
  cfg.sa2_centroids = 2;
  cfg.sa2_radius = 12.0;
  cfg.sa2_group = 4;
  cfg.sa2_dim = 7;
  cfg.conv1 = 3;
  cfg.conv2 = 4;
  cfg.conv3 = 5;
  cfg.map_channels = 6;
  return cfg;
}

LabeledPointCloud random_cloud(Rng& rng, int n, int classes) {
  LabeledPointCloud cloud;
  for (int i = 0; i < n; ++i) {
    cloud.points.emplace_back(rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(0, 4));
    cloud.labels.push_back(static_cast<int>(rng.index(classes)));
  }
  return cloud;
}

SemanticImage random_image(Rng& rng, int h, int w, int classes) {
  SemanticImage img;
  img.height = h;
  img.width = w;
  img.labels.resize(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img.labels(r, c) = static_cast<int>(rng.index(classes));
  }
  return img;
}

}  // namespace

TEST_CASE("farthest point sampling is order independent and spans the cloud") {
  Rng rng(3);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 50; ++i) {
    pts.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-1, 1));
  }
  auto picked = farthest_point_indices(pts, 8);
  REQUIRE(picked.size() == 8);

  std::vector<int> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  std::vector<Eigen::Vector3d> shuffled(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) shuffled[perm[i]] = pts[i];
  auto picked2 = farthest_point_indices(shuffled, 8);
  REQUIRE(picked2.size() == 8);
  for (int s = 0; s < 8; ++s) {
    CHECK(shuffled[picked2[s]] == pts[picked[s]]);  // same points chosen, same order
  }
}

TEST_CASE("radius groups always contain their centroid") {
  Rng rng(5);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 30; ++i) {
    pts.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), 0);
  }
  auto centroids = farthest_point_indices(pts, 5);
  auto groups = radius_groups(pts, centroids, 3.0, 8);
  for (size_t g = 0; g < groups.size(); ++g) {
    REQUIRE(!groups[g].empty());
    CHECK(groups[g][0] == centroids[g]);  // nearest member is the centroid itself
    CHECK(static_cast<int>(groups[g].size()) <= 8);
  }
}

TEST_CASE("point encoder produces the configured width for any cloud size") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(7);
  ParamStore store;
  auto params = PointEncoderParams::create(store, cfg, rng);
  for (int n : {1, 3, 20, 100}) {
    Rng data_rng(n);
    auto cloud = random_cloud(data_rng, n, cfg.num_classes);
    Tape t;
    auto out = point_encoder(t, cloud, params, cfg);
    CHECK(t.value(out.global_feature).rows() == 1);
    CHECK(t.value(out.global_feature).cols() == cfg.global_dim);
  }
}

TEST_CASE("point encoder rejects empty clouds and foreign class ids") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(7);
  ParamStore store;
  auto params = PointEncoderParams::create(store, cfg, rng);
  Tape t;
  CHECK_THROWS_AS(point_encoder(t, LabeledPointCloud{}, params, cfg), DegenerateInputError);

  LabeledPointCloud bad;
  bad.points = {{0, 0, 0}};
  bad.labels = {99};
  CHECK_THROWS_AS(point_encoder(t, bad, params, cfg), ConfigError);
  // with semantics off, the dummy row absorbs any label
  CHECK_NOTHROW(point_encoder(t, bad, params, cfg, false));
}

TEST_CASE("point encoder is a set function under permutation") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(11);
  ParamStore store;
  auto params = PointEncoderParams::create(store, cfg, rng);
  for (int trial = 0; trial < 5; ++trial) {
    Rng data_rng(100 + trial);
    auto cloud = random_cloud(data_rng, 60, cfg.num_classes);
    Tape t1;
    const Mat base = t1.value(point_encoder(t1, cloud, params, cfg).global_feature);

    std::vector<int> perm(cloud.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, data_rng);
    LabeledPointCloud shuffled;
    shuffled.points.resize(cloud.size());
    shuffled.labels.resize(cloud.size());
    for (size_t i = 0; i < perm.size(); ++i) {
      shuffled.points[perm[i]] = cloud.points[i];
      shuffled.labels[perm[i]] = cloud.labels[i];
    }
    Tape t2;
    const Mat moved = t2.value(point_encoder(t2, shuffled, params, cfg).global_feature);
    CHECK((moved - base).norm() <= 1e-6 * std::max(1.0, base.norm()));
  }
}

TEST_CASE("point encoder gradients match finite differences at toy size") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(13);
  ParamStore store;
  auto params = PointEncoderParams::create(store, cfg, rng);
  Rng data_rng(17);
  auto cloud = random_cloud(data_rng, 18, cfg.num_classes);

  Mat probe(cfg.global_dim, 1);
  for (int i = 0; i < probe.size(); ++i) probe(i, 0) = 0.2 + 0.05 * i;
  auto forward = [&]() {
    Tape t;
    auto out = point_encoder(t, cloud, params, cfg);
    return t.value(matmul(out.global_feature, t.constant(probe)))(0, 0);
  };
  store.zero_grads();
  {
    Tape t;
    auto out = point_encoder(t, cloud, params, cfg);
    t.backward(matmul(out.global_feature, t.constant(probe)));
  }
  auto report = sgm::testing::finite_diff_check(store, forward);
  INFO("worst " << report.worst_tensor << " rel " << report.max_rel_err);
  CHECK(report.max_rel_err <= 1e-3);
}

TEST_CASE("image encoder shapes track the configured grid reduction") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(19);
  ParamStore store;
  auto params = ImageEncoderParams::create(store, cfg, rng);
  Rng data_rng(23);
  auto img = random_image(data_rng, 16, 20, cfg.num_classes);
  Tape t;
  auto out = image_encoder(t, img, params, cfg);
  CHECK(t.value(out.global_feature).cols() == cfg.global_dim);
  CHECK(t.value(out.feature_map).rows() == cfg.map_channels);
  CHECK(out.grid_h == 4);
  CHECK(out.grid_w == 5);
  CHECK(t.value(out.feature_map).cols() == 20);

  SemanticImage empty;
  CHECK_THROWS_AS(image_encoder(t, empty, params, cfg), DegenerateInputError);
}

TEST_CASE("constant single-class image yields a spatially constant map") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(29);
  ParamStore store;
  auto params = ImageEncoderParams::create(store, cfg, rng);
  SemanticImage img;
  img.height = 12;
  img.width = 12;
  img.labels = Eigen::MatrixXi::Constant(12, 12, 2);
  Tape t;
  auto out = image_encoder(t, img, params, cfg);
  const Mat& map = t.value(out.feature_map);
  for (int c = 1; c < map.cols(); ++c) {
    CHECK(map.col(c).isApprox(map.col(0), 1e-12));
  }
}

TEST_CASE("rgb channels enter the stack when present") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(31);
  ParamStore store;
  auto params = ImageEncoderParams::create(store, cfg, rng);
  Rng data_rng(37);
  auto img = random_image(data_rng, 8, 8, cfg.num_classes);
  Tape t;
  const Mat without = t.value(image_encoder(t, img, params, cfg).global_feature);
  img.rgb.emplace();
  for (auto& ch : *img.rgb) ch = Eigen::MatrixXd::Constant(8, 8, 0.7);
  const Mat with_rgb = t.value(image_encoder(t, img, params, cfg).global_feature);
  CHECK(without != with_rgb);
}

TEST_CASE("image encoder gradients match finite differences at toy size") {
  EncoderConfig cfg = toy_encoder();
  Rng rng(41);
  ParamStore store;
  auto params = ImageEncoderParams::create(store, cfg, rng);
  Rng data_rng(43);
  auto img = random_image(data_rng, 8, 8, cfg.num_classes);

  Mat probe(cfg.global_dim, 1);
  for (int i = 0; i < probe.size(); ++i) probe(i, 0) = 0.15 * (i + 1);
  auto forward = [&]() {
    Tape t;
    auto out = image_encoder(t, img, params, cfg);
    return t.value(matmul(out.global_feature, t.constant(probe)))(0, 0);
  };
  store.zero_grads();
  {
    Tape t;
    auto out = image_encoder(t, img, params, cfg);
    t.backward(matmul(out.global_feature, t.constant(probe)));
  }
  auto report = sgm::testing::finite_diff_check(store, forward, 1e-4, 40);
  INFO("worst " << report.worst_tensor << " rel " << report.max_rel_err);
  CHECK(report.max_rel_err <= 1e-3);
}
