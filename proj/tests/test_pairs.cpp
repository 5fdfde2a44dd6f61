#include <catch2/catch_amalgamated.hpp>
#include <set>
#include <sstream>

#include "sgmatch/pairs.hpp"
#include "sgmatch/rng.hpp"

using namespace sgm;

namespace {

PoseRecord pose_at(int frame, double x, double y = 0, double z = 0) {
  PoseRecord p;
  p.scene_id = SceneId{0, frame};
  p.translation << x, y, z;
  return p;
}

}  // namespace

TEST_CASE("pose_distance basics") {
  CHECK(pose_distance(pose_at(0, 0), pose_at(1, 0)) == 0.0);
  CHECK(pose_distance(pose_at(0, 0, 0), pose_at(1, 3, 4)) == Catch::Approx(5.0));
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto a = pose_at(0, rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-5, 5));
    auto b = pose_at(1, rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-5, 5));
    CHECK(pose_distance(a, b) == pose_distance(b, a));
  }
}

TEST_CASE("pair labeling respects both thresholds and the exclusion band") {
  // frames at x = 0, 1.5, 10, 25: (0,1.5) positive, (0,25) negative,
  // (0,10) excluded
  std::vector<PoseRecord> poses = {pose_at(0, 0), pose_at(1, 1.5), pose_at(2, 10),
                                   pose_at(3, 25)};
  PairGenConfig cfg;
  cfg.neg_per_pos = 100.0;  // keep every candidate negative
  auto result = generate_pairs(poses, cfg);
  REQUIRE(!result.no_positives);
  bool saw_pos_0_1 = false, saw_neg_0_3 = false;
  for (const auto& p : result.pairs) {
    // frame 2 at x=10 is within (2, 20) of frames 0, 1, and 3; it may only
    // appear against itself (distance 0, a positive)
    if (p.image_scene.frame == 2 || p.cloud_scene.frame == 2) {
      CHECK(p.image_scene.frame == p.cloud_scene.frame);
    }
    if (p.image_scene.frame == 0 && p.cloud_scene.frame == 1) {
      saw_pos_0_1 = true;
      CHECK(p.positive);
    }
    if (p.image_scene.frame == 0 && p.cloud_scene.frame == 3) {
      saw_neg_0_3 = true;
      CHECK(!p.positive);
    }
  }
  CHECK(saw_pos_0_1);
  CHECK(saw_neg_0_3);
}

TEST_CASE("generated pairs always satisfy their own threshold when re-measured") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PoseRecord> poses;
    double x = 0;
    for (int f = 0; f < 40; ++f) {
      poses.push_back(pose_at(f, x, rng.uniform(-1, 1)));
      x += rng.uniform(0, 4);
    }
    PairGenConfig cfg;
    cfg.rng_seed = trial;
    auto result = generate_pairs(poses, cfg);
    size_t n_pos = 0, n_neg = 0;
    for (const auto& p : result.pairs) {
      const double d = pose_distance(poses[p.image_scene.frame], poses[p.cloud_scene.frame]);
      CHECK(d == p.distance);
      if (p.positive) {
        ++n_pos;
        CHECK(d < cfg.pos_threshold);
      } else {
        ++n_neg;
        CHECK(d > cfg.neg_threshold);
      }
    }
    CHECK(n_neg <= n_pos);  // neg_per_pos = 1 caps negatives at the positive count
  }
}

TEST_CASE("generate_pairs is deterministic per seed") {
  std::vector<PoseRecord> poses;
  Rng rng(3);
  for (int f = 0; f < 60; ++f) poses.push_back(pose_at(f, f * 1.1, rng.uniform(-1, 1)));
  PairGenConfig cfg;
  cfg.rng_seed = 77;
  auto a = generate_pairs(poses, cfg);
  auto b = generate_pairs(poses, cfg);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].image_scene == b.pairs[i].image_scene);
    CHECK(a.pairs[i].cloud_scene == b.pairs[i].cloud_scene);
    CHECK(a.pairs[i].positive == b.pairs[i].positive);
  }
  cfg.rng_seed = 78;
  auto c = generate_pairs(poses, cfg);
  bool any_diff = c.pairs.size() != a.pairs.size();
  for (size_t i = 0; !any_diff && i < a.pairs.size(); ++i) {
    any_diff = !(a.pairs[i].image_scene == c.pairs[i].image_scene) ||
               !(a.pairs[i].cloud_scene == c.pairs[i].cloud_scene);
  }
  CHECK(any_diff);
}

TEST_CASE("no positive pairs sets the warning flag instead of failing") {
  std::vector<PoseRecord> poses = {pose_at(0, 0), pose_at(1, 100)};
  PairGenConfig cfg;
  cfg.allow_same_index = false;
  auto result = generate_pairs(poses, cfg);
  CHECK(result.no_positives);
  CHECK(result.pairs.empty());
}

TEST_CASE("threshold ordering is validated") {
  PairGenConfig cfg;
  cfg.pos_threshold = 30;
  CHECK_THROWS_AS(generate_pairs({}, cfg), ConfigError);
}

TEST_CASE("leave-one-out splits cover every sequence exactly once") {
  auto splits = leave_one_out_splits({0, 2, 5, 6, 7, 8});
  CHECK(splits.size() == 6);
  std::set<int> test_ids;
  for (const auto& [train, test] : splits) {
    CHECK(train.size() == 5);
    CHECK(std::find(train.begin(), train.end(), test) == train.end());
    test_ids.insert(test);
  }
  CHECK(test_ids == std::set<int>{0, 2, 5, 6, 7, 8});

  auto two = leave_one_out_splits({10, 20});
  REQUIRE(two.size() == 2);
  CHECK(two[0].first == std::vector<int>{20});
  CHECK(two[0].second == 10);
  CHECK(two[1].first == std::vector<int>{10});
  CHECK(two[1].second == 20);

  CHECK_THROWS_AS(leave_one_out_splits({42}), ConfigError);
}

TEST_CASE("pairs file round trip keeps labels and infinite distances") {
  std::vector<SamplePair> pairs = {
      SamplePair{{0, 1}, {0, 2}, true, 0.5},
      SamplePair{{0, 3}, {1, 4}, false, std::numeric_limits<double>::infinity()},
  };
  std::stringstream buffer;
  save_pairs(buffer, pairs);
  auto loaded = load_pairs(buffer);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].positive);
  CHECK(loaded[0].distance == 0.5);
  CHECK(!loaded[1].positive);
  CHECK(std::isinf(loaded[1].distance));
  CHECK(loaded[1].cloud_scene == SceneId{1, 4});
}
