#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/eval.hpp"
#include "sgmatch/model.hpp"
#include "sgmatch/nn.hpp"

namespace sgm {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 35;
  int batch_size = 16;
  uint64_t rng_seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  // constant learning rate by default; optional step decay
  bool lr_step_decay = false;
  double lr_decay_factor = 0.5;
  int lr_decay_every = 10;  // epochs

  void validate() const {
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_f1 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<EpochStats> log;
};

// Inference scores (match probability) for a sample set.
inline std::vector<double> score_samples(const CrossModalModel& model,
                                         const std::vector<PreparedSample>& samples) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) {
    Tape t;
    ForwardResult fr = model_forward(t, model, s);
    scores.push_back(t.value(fr.match_prob)(0, 0));
  }
  return scores;
}

inline std::vector<int> sample_labels(const std::vector<PreparedSample>& samples) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return labels;
}

// End-to-end optimization with Adam: per-epoch seeded shuffling, mean-loss
// batches, one optimizer step per batch, deterministic for a fixed seed.
// Records mean train loss and (when a validation set is given) held-out F1
// at threshold 0.5 per epoch. A non-finite loss aborts with the batch id.
inline TrainResult train(CrossModalModel& model, const std::vector<PreparedSample>& train_set,
                         const std::vector<PreparedSample>& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("empty training set");
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.learning_rate;
  adam_cfg.beta1 = cfg.adam_beta1;
  adam_cfg.beta2 = cfg.adam_beta2;
  Adam adam(adam_cfg);

  TrainResult result;
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_step_decay && epoch > 0 && epoch % cfg.lr_decay_every == 0) {
      adam.set_lr(adam.lr() * cfg.lr_decay_factor);
    }
    Rng shuffle_rng(mix_seed(cfg.rng_seed, 0x5e5e5e5eULL + epoch));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    int batch_index = 0;
    for (size_t at = 0; at < order.size(); at += cfg.batch_size, ++batch_index) {
      const size_t batch_end = std::min(order.size(), at + cfg.batch_size);
      const int batch_n = static_cast<int>(batch_end - at);
      model.store.zero_grads();
      for (size_t s = at; s < batch_end; ++s) {
        Tape t;
        Var loss = sample_loss(t, model, train_set[order[s]]);
        const double value = t.value(loss)(0, 0);
        if (!std::isfinite(value)) {
          throw TrainError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ", sample " +
                           std::to_string(order[s]));
        }
        loss_sum += value;
        t.backward(loss);
      }
      for (auto& p : model.store.items()) p->grad /= static_cast<double>(batch_n);
      adam.step(model.store);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      stats.val_f1 = f1_score(score_samples(model, val_set), sample_labels(val_set)).f1;
    }
    result.log.push_back(stats);
  }
  return result;
}

inline void save_metrics_log(std::ostream& out, const std::vector<EpochStats>& log) {
  out << "epoch\ttrain_loss\tval_f1\n" << std::setprecision(10);
  for (const auto& e : log) {
    out << e.epoch << '\t' << e.train_loss << '\t';
    if (std::isnan(e.val_f1)) {
      out << '-';
    } else {
      out << e.val_f1;
    }
    out << '\n';
  }
}

// ---- checkpoint container ---------------------------------------------------
// Versioned, self-describing named-tensor archive. Load fails loudly on
// version, name, shape, or truncation problems.

namespace detail {

constexpr char kCkptMagic[8] = {'S', 'G', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kCkptVersion = 1;

}  // namespace detail

inline void save_checkpoint(const ParamStore& store, const std::filesystem::path& path,
                            uint64_t config_hash, int capacity = 0) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
  detail::write_pod(out, detail::kCkptVersion);
  detail::write_pod(out, config_hash);
  detail::write_pod(out, static_cast<uint32_t>(capacity));
  detail::write_pod(out, static_cast<uint32_t>(store.items().size()));
  for (const auto& p : store.items()) {
    detail::write_pod(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::write_pod(out, static_cast<uint32_t>(p->value.rows()));
    detail::write_pod(out, static_cast<uint32_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw IoError("short write to " + path.string());
}

// Loads into an existing store (shapes fixed by the model config); returns
// the config hash recorded at save time. When expected_capacity is nonzero
// the stored graph capacity must match it.
inline uint64_t load_checkpoint(ParamStore& store, const std::filesystem::path& path,
                                int expected_capacity = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCkptMagic, sizeof(magic)) != 0) {
    throw ParseError("not a checkpoint (bad magic): " + path.string());
  }
  const auto version = detail::read_pod<uint32_t>(in, "version");
  if (version != detail::kCkptVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto config_hash = detail::read_pod<uint64_t>(in, "config_hash");
  const auto capacity = detail::read_pod<uint32_t>(in, "capacity");
  if (expected_capacity != 0 && capacity != 0 &&
      capacity != static_cast<uint32_t>(expected_capacity)) {
    throw ParseError("checkpoint was produced with graph capacity " + std::to_string(capacity) +
                     " but the configured capacity is " + std::to_string(expected_capacity));
  }
  const auto count = detail::read_pod<uint32_t>(in, "tensor count");
  if (count != store.items().size()) {
    throw ParseError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                     std::to_string(store.items().size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<uint32_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw ParseError("checkpoint truncated in tensor name");
    ParamTensor* p = store.find(name);
    if (!p) throw ParseError("checkpoint tensor '" + name + "' unknown to this model");
    const auto rows = detail::read_pod<uint32_t>(in, (name + " rows").c_str());
    const auto cols = detail::read_pod<uint32_t>(in, (name + " cols").c_str());
    if (rows != static_cast<uint32_t>(p->value.rows()) ||
        cols != static_cast<uint32_t>(p->value.cols())) {
      throw ParseError("tensor '" + name + "' is " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " in the checkpoint but " +
                       std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()) +
                       " in the model");
    }
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    if (!in) throw ParseError("checkpoint truncated in tensor '" + name + "' payload");
  }
  return config_hash;
}

// FNV-1a over the resolved configuration text; stored in checkpoints.
inline uint64_t config_hash(const std::string& resolved_config) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : resolved_config) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace sgm
