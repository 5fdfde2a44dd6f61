#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/rng.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

inline double pose_distance(const PoseRecord& a, const PoseRecord& b) {
  return (a.translation - b.translation).norm();
}

struct PairGenConfig {
  double pos_threshold = 2.0;   // meters, match when strictly below
  double neg_threshold = 20.0;  // meters, non-match when strictly above
  double neg_per_pos = 1.0;     // negatives kept per positive
  uint64_t rng_seed = 0;
  bool allow_same_index = true;  // image frame paired with the cloud of the same frame
};

struct PairGenResult {
  std::vector<SamplePair> pairs;
  bool no_positives = false;  // warning flag, not an error
};

// Label every (image frame, cloud frame) combination of one sequence by pose
// distance. Distances inside [pos_threshold, neg_threshold] are excluded
// entirely; negatives are down-sampled to neg_per_pos per positive.
// Deterministic for a fixed seed.
inline PairGenResult generate_pairs(const std::vector<PoseRecord>& poses,
                                    const PairGenConfig& config) {
  if (!(config.pos_threshold < config.neg_threshold)) {
    throw ConfigError("positive threshold must be below negative threshold");
  }
  const int n = static_cast<int>(poses.size());
  std::vector<SamplePair> positives;
  std::vector<SamplePair> negative_pool;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j && !config.allow_same_index) continue;
      const double d = pose_distance(poses[i], poses[j]);
      if (d < config.pos_threshold) {
        positives.push_back(SamplePair{poses[i].scene_id, poses[j].scene_id, true, d});
      } else if (d > config.neg_threshold) {
        negative_pool.push_back(SamplePair{poses[i].scene_id, poses[j].scene_id, false, d});
      }
    }
  }
  PairGenResult result;
  if (positives.empty()) {
    result.no_positives = true;
    return result;
  }
  const auto target =
      static_cast<size_t>(std::llround(config.neg_per_pos * static_cast<double>(positives.size())));
  Rng rng(config.rng_seed);
  const auto keep = sample_without_replacement(static_cast<int>(negative_pool.size()),
                                               static_cast<int>(std::min(target, negative_pool.size())),
                                               rng);
  result.pairs = std::move(positives);
  for (int idx : keep) result.pairs.push_back(negative_pool[idx]);
  return result;
}

// One split per sequence: it is the test set, the rest train.
inline std::vector<std::pair<std::vector<int>, int>> leave_one_out_splits(
    const std::vector<int>& sequence_ids) {
  if (sequence_ids.size() < 2) {
    throw ConfigError("leave-one-out needs at least 2 sequences, got " +
                      std::to_string(sequence_ids.size()));
  }
  std::vector<std::pair<std::vector<int>, int>> splits;
  for (int test_id : sequence_ids) {
    std::vector<int> train;
    for (int id : sequence_ids) {
      if (id != test_id) train.push_back(id);
    }
    splits.emplace_back(std::move(train), test_id);
  }
  return splits;
}

// ---- pairs file -----------------------------------------------------------------
// Line format: img_seq img_frame cloud_seq cloud_frame label distance

inline void save_pairs(std::ostream& out, const std::vector<SamplePair>& pairs) {
  out << std::setprecision(17);
  for (const auto& p : pairs) {
    out << p.image_scene.sequence << ' ' << p.image_scene.frame << ' ' << p.cloud_scene.sequence
        << ' ' << p.cloud_scene.frame << ' ' << (p.positive ? 1 : 0) << ' ';
    if (std::isinf(p.distance)) {
      out << "inf";
    } else {
      out << p.distance;
    }
    out << '\n';
  }
}

inline std::vector<SamplePair> load_pairs(std::istream& in) {
  std::vector<SamplePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    SamplePair p;
    int label = 0;
    std::string dist_token;
    if (!(ss >> p.image_scene.sequence >> p.image_scene.frame >> p.cloud_scene.sequence >>
          p.cloud_scene.frame >> label >> dist_token)) {
      throw ParseError("pairs line " + std::to_string(line_no) + ": expected 6 fields");
    }
    if (label != 0 && label != 1) {
      throw ParseError("pairs line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    p.positive = label == 1;
    p.distance = dist_token == "inf" ? std::numeric_limits<double>::infinity()
                                     : std::stod(dist_token);
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace sgm
