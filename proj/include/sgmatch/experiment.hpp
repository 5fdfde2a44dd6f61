#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/eval.hpp"
#include "sgmatch/model.hpp"
#include "sgmatch/pairs.hpp"
#include "sgmatch/train.hpp"

namespace sgm {

// Published full-dataset reference values, displayed in reports for
// comparison; desk-scale runs never assert against them.
struct PublishedReference {
  double mean_f1_full = 0.816;
  double ablation_base = 0.759;
  double ablation_base_semantic = 0.782;
  double ablation_full = 0.836;
};

inline double published_reference_for(Ablation a) {
  const PublishedReference ref;
  switch (a) {
    case Ablation::base: return ref.ablation_base;
    case Ablation::base_semantic: return ref.ablation_base_semantic;
    default: return ref.ablation_full;
  }
}

struct ExperimentDataset {
  std::map<int, std::vector<PreparedSample>> by_sequence;
};

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  std::vector<Ablation> ablations = {Ablation::full};
  double threshold = 0.5;
  std::filesystem::path out_dir;
  bool train_enabled = true;   // otherwise checkpoints must already exist
  bool write_plot = false;
  uint64_t resolved_config_hash = 0;
};

struct ExperimentRow {
  Ablation ablation = Ablation::full;
  std::map<int, double> f1_by_sequence;
  double mean_f1 = 0.0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::string table_text;
};

namespace detail {

inline std::string split_checkpoint_name(Ablation a, int test_seq) {
  std::ostringstream s;
  s << "ckpt_" << to_string(a) << "_test" << std::setw(2) << std::setfill('0') << test_seq
    << ".bin";
  return s.str();
}

}  // namespace detail

// Leave-one-sequence-out evaluation: per ablation row and per held-out
// sequence, train on the remaining sequences (or load the row's checkpoint),
// score the held-out pairs, and report micro-averaged F1 per sequence plus
// the mean. Writes a delimited table, per-split P-R points, and optionally
// an SVG plot. Identical seed/config/data give identical report bytes.
inline ExperimentReport run_experiment(const ExperimentDataset& data,
                                       const ExperimentConfig& cfg) {
  if (data.by_sequence.size() < 2) {
    throw ConfigError("experiments need at least 2 sequences for leave-one-out");
  }
  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  std::vector<int> sequence_ids;
  for (const auto& [seq, _] : data.by_sequence) sequence_ids.push_back(seq);
  const auto splits = leave_one_out_splits(sequence_ids);

  ExperimentReport report;
  std::vector<std::pair<std::string, std::vector<PrPoint>>> plot_curves;

  for (Ablation ablation : cfg.ablations) {
    ExperimentRow row;
    row.ablation = ablation;
    double f1_sum = 0.0;
    for (const auto& [train_ids, test_id] : splits) {
      ModelConfig model_cfg = cfg.model;
      model_cfg.ablation = ablation;
      CrossModalModel model(model_cfg);

      const fs::path ckpt =
          cfg.out_dir / detail::split_checkpoint_name(ablation, test_id);
      if (cfg.train_enabled) {
        std::vector<PreparedSample> train_set;
        for (int seq : train_ids) {
          const auto& samples = data.by_sequence.at(seq);
          train_set.insert(train_set.end(), samples.begin(), samples.end());
        }
        train(model, train_set, {}, cfg.train);
        if (!cfg.out_dir.empty()) {
          save_checkpoint(model.store, ckpt, cfg.resolved_config_hash, model_cfg.capacity);
        }
      } else {
        if (!fs::exists(ckpt)) {
          throw ConfigError("training disabled and checkpoint missing: " + ckpt.string());
        }
        load_checkpoint(model.store, ckpt, model_cfg.capacity);
      }

      const auto& test_set = data.by_sequence.at(test_id);
      const auto scores = score_samples(model, test_set);
      const auto labels = sample_labels(test_set);
      MetricsReport metrics = f1_score(scores, labels, cfg.threshold);
      row.f1_by_sequence[test_id] = metrics.f1;
      f1_sum += metrics.f1;

      bool both_classes = false;
      {
        bool pos = false, neg = false;
        for (int l : labels) (l ? pos : neg) = true;
        both_classes = pos && neg;
      }
      if (!cfg.out_dir.empty() && both_classes) {
        const auto points = pr_curve(scores, labels);
        std::ostringstream name;
        name << "pr_" << to_string(ablation) << "_test" << std::setw(2) << std::setfill('0')
             << test_id << ".tsv";
        std::ofstream out(cfg.out_dir / name.str(), std::ios::trunc);
        save_pr_points(out, points);
        if (cfg.write_plot) {
          plot_curves.emplace_back(std::string(to_string(ablation)) + " / test " +
                                       std::to_string(test_id),
                                   points);
        }
      }
    }
    row.mean_f1 = f1_sum / static_cast<double>(splits.size());
    report.rows.push_back(row);
  }

  // table: one row per ablation, one column per held-out sequence plus Mean
  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << "# micro-averaged F1 per held-out sequence at threshold " << cfg.threshold << "\n";
  table << "# published full-dataset reference: mean F1 "
        << PublishedReference{}.mean_f1_full << " (never asserted at this scale)\n";
  table << "method";
  for (int seq : sequence_ids) {
    table << '\t' << std::setw(2) << std::setfill('0') << seq << std::setfill(' ');
  }
  table << "\tMean\treference\n";
  for (const auto& row : report.rows) {
    table << to_string(row.ablation);
    for (int seq : sequence_ids) table << '\t' << row.f1_by_sequence.at(seq);
    table << '\t' << row.mean_f1 << '\t' << published_reference_for(row.ablation) << '\n';
  }
  report.table_text = table.str();

  if (!cfg.out_dir.empty()) {
    std::ofstream out(cfg.out_dir / "report.tsv", std::ios::trunc);
    out << report.table_text;
    if (cfg.write_plot && !plot_curves.empty()) {
      std::ofstream svg(cfg.out_dir / "pr_curves.svg", std::ios::trunc);
      svg << pr_curves_svg(plot_curves);
    }
  }
  return report;
}

}  // namespace sgm
