// Command-line entry point: nodes, pairs, synth, train, eval, ablate.
//
// Options come from flags or a key-value config file (flags win). Every run
// writes a resolved-config snapshot beside its outputs; errors print one
// machine-parseable line on stderr and map to stable exit codes.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "sgmatch/config.hpp"
#include "sgmatch/experiment.hpp"
#include "sgmatch/kitti_io.hpp"
#include "sgmatch/model.hpp"
#include "sgmatch/synth.hpp"
#include "sgmatch/train.hpp"

namespace fs = std::filesystem;
using namespace sgm;

namespace {

int exit_code_for(const Error& e) {
  static const std::map<std::string, int> codes = {
      {"config", 3}, {"parse", 4}, {"io", 5}, {"degenerate", 6}, {"train", 7},
      {"generation", 8},
  };
  const auto it = codes.find(e.category());
  return it == codes.end() ? 1 : it->second;
}

struct SceneRef {
  int sequence = 0;
  int frame = 0;
};

SceneRef parse_scene_ref(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("scene must be <sequence>:<frame>, got '" + text + "'");
  }
  SceneRef ref;
  try {
    ref.sequence = std::stoi(text.substr(0, colon));
    ref.frame = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("scene must be <sequence>:<frame>, got '" + text + "'");
  }
  return ref;
}

void write_snapshot(const CLI::App& app, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "resolved_config.ini", std::ios::trunc);
  out << app.config_to_str(true, true);
}

void print_nodes(std::ostream& out, const SceneId& id, Modality modality,
                 const std::vector<InstanceNode>& nodes) {
  out << std::setprecision(10);
  for (const auto& n : nodes) {
    out << id.sequence << ':' << id.frame << '\t' << to_string(modality) << '\t' << n.class_id
        << '\t' << n.position.x() << '\t' << n.position.y() << '\t' << n.position.z() << '\t'
        << n.member_count << '\n';
  }
}

// Scenes referenced by a pair list, loaded once each.
struct SceneCache {
  const DatasetLayout& layout;
  std::map<SceneId, LabeledPointCloud> clouds;
  std::map<SceneId, SemanticImage> images;

  const LabeledPointCloud& cloud(SceneId id) {
    auto it = clouds.find(id);
    if (it == clouds.end()) it = clouds.emplace(id, layout.load_cloud(id)).first;
    return it->second;
  }
  const SemanticImage& image(SceneId id) {
    auto it = images.find(id);
    if (it == images.end()) it = images.emplace(id, layout.load_image(id)).first;
    return it->second;
  }
};

std::vector<PreparedSample> prepare_sequence(const DatasetLayout& layout, int sequence,
                                             const RunOptions& opt) {
  const auto poses = load_poses(layout.poses_path(sequence), sequence);
  const auto generated = generate_pairs(poses, opt.pair_config(sequence));
  if (generated.no_positives) {
    std::cerr << "warning: sequence " << sequence << " yields no positive pairs\n";
  }
  SceneCache cache{layout};
  const PrepConfig prep = opt.prep_config();
  std::vector<PreparedSample> samples;
  samples.reserve(generated.pairs.size());
  for (const auto& pair : generated.pairs) {
    samples.push_back(prepare_sample(cache.cloud(pair.cloud_scene),
                                     cache.image(pair.image_scene), pair.positive ? 1 : 0,
                                     prep));
  }
  return samples;
}

ExperimentDataset load_experiment_dataset(const RunOptions& opt) {
  if (opt.data_root.empty()) throw ConfigError("--data-root is required");
  DatasetLayout layout{opt.data_root};
  ExperimentDataset data;
  for (int seq : layout.sequences()) {
    data.by_sequence[seq] = prepare_sequence(layout, seq, opt);
  }
  return data;
}

int run_nodes(const RunOptions& opt, const std::string& scan, const std::string& labels,
              const std::string& image, const std::string& scene, const std::string& out_path) {
  const SceneRef ref = scene.empty() ? SceneRef{} : parse_scene_ref(scene);
  const SceneId id{ref.sequence, ref.frame};
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) throw IoError("cannot write " + out_path);
    out = &file;
  }
  if (scan.empty() && image.empty()) {
    throw ConfigError("nodes needs --scan/--labels and/or --image");
  }
  if (!scan.empty()) {
    if (labels.empty()) throw ConfigError("--scan requires --labels");
    const auto cloud = load_velodyne_scan(scan, labels, id);
    print_nodes(*out, id, Modality::lidar,
                cluster_lidar_nodes(cloud, opt.lidar_cluster_config()));
  }
  if (!image.empty()) {
    const auto raster = load_semantic_image(image, id);
    print_nodes(*out, id, Modality::image, image_nodes(raster, opt.image_cluster_config()));
  }
  return 0;
}

int run_pairs(const RunOptions& opt) {
  if (opt.data_root.empty()) throw ConfigError("--data-root is required");
  DatasetLayout layout{opt.data_root};
  fs::create_directories(opt.out_dir);
  std::ofstream out(fs::path(opt.out_dir) / "pairs.tsv", std::ios::trunc);
  size_t total = 0;
  for (int seq : layout.sequences()) {
    const auto poses = load_poses(layout.poses_path(seq), seq);
    const auto generated = generate_pairs(poses, opt.pair_config(seq));
    if (generated.no_positives) {
      std::cerr << "warning: sequence " << seq << " yields no positive pairs\n";
    }
    save_pairs(out, generated.pairs);
    total += generated.pairs.size();
  }
  std::cerr << "wrote " << total << " pairs to " << opt.out_dir << "/pairs.tsv\n";
  return 0;
}

int run_synth(const RunOptions& opt) {
  write_synth_dataset(opt.scene_spec(), opt.track_config(), opt.out_dir);
  std::cerr << "wrote " << opt.synth_sequences << " synthetic sequences under " << opt.out_dir
            << "\n";
  return 0;
}

int run_train(const RunOptions& opt, const std::string& val_sequence) {
  ExperimentDataset data = load_experiment_dataset(opt);
  std::optional<int> val_seq;
  if (!val_sequence.empty()) val_seq = std::stoi(val_sequence);

  std::vector<PreparedSample> train_set, val_set;
  for (auto& [seq, samples] : data.by_sequence) {
    auto& target = (val_seq && seq == *val_seq) ? val_set : train_set;
    target.insert(target.end(), samples.begin(), samples.end());
  }
  if (train_set.empty()) throw ConfigError("no training samples");

  CrossModalModel model(opt.model_config());
  const TrainResult result = train(model, train_set, val_set, opt.train_config());

  fs::create_directories(opt.out_dir);
  std::ofstream metrics(fs::path(opt.out_dir) / "metrics.tsv", std::ios::trunc);
  save_metrics_log(metrics, result.log);
  save_checkpoint(model.store, fs::path(opt.out_dir) / "checkpoint.bin", 0,
                  model.config.capacity);
  std::cerr << "trained " << opt.epochs << " epochs on " << train_set.size()
            << " pairs; checkpoint and metrics in " << opt.out_dir << "\n";
  return 0;
}

int run_eval(const RunOptions& opt, bool all_ablations) {
  ExperimentDataset data = load_experiment_dataset(opt);
  ExperimentConfig cfg;
  cfg.model = opt.model_config();
  cfg.train = opt.train_config();
  cfg.threshold = opt.threshold;
  cfg.out_dir = opt.out_dir;
  cfg.train_enabled = opt.train_enabled;
  cfg.write_plot = opt.write_plot;
  if (all_ablations) {
    cfg.ablations = {Ablation::base, Ablation::base_semantic, Ablation::full};
  } else {
    cfg.ablations = {parse_ablation(opt.ablation)};
  }
  const ExperimentReport report = run_experiment(data, cfg);
  std::cout << report.table_text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-modal semantic-graph relocalization pipeline"};
  app.require_subcommand(0, 1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key-value config file; flags override file values");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  RunOptions opt;
  app.add_option("--data-root", opt.data_root, "dataset root directory");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.seed, "global random seed");
  app.add_option("--ablation", opt.ablation, "base|base+semantic|full");

  app.add_option("--num-classes", opt.num_classes, "semantic class count");
  app.add_option("--capacity", opt.capacity, "graph slot count");
  app.add_option("--k", opt.k, "graph neighbours per node");
  app.add_option("--graph-class-dim", opt.graph_class_dim);
  app.add_option("--graph-pos-dim", opt.graph_pos_dim);
  app.add_option("--graph-edge-hidden", opt.graph_edge_hidden);
  app.add_flag("--share-graph-weights,!--no-share-graph-weights", opt.share_graph_weights,
               "share the graph network weights across modalities");
  app.add_option("--encoder-class-dim", opt.encoder_class_dim);
  app.add_option("--global-dim", opt.global_dim);
  app.add_option("--map-channels", opt.map_channels);
  app.add_option("--conv1", opt.conv1);
  app.add_option("--conv2", opt.conv2);
  app.add_option("--conv3", opt.conv3);
  app.add_option("--sa1-centroids", opt.sa1_centroids);
  app.add_option("--sa2-centroids", opt.sa2_centroids);
  app.add_option("--sa1-dim", opt.sa1_dim);
  app.add_option("--sa2-dim", opt.sa2_dim);
  app.add_option("--shared-dim", opt.shared_dim);
  app.add_option("--fc-hidden", opt.fc_hidden);
  app.add_option("--range-scale", opt.range_scale);
  app.add_option("--fusion-mode", opt.fusion_mode, "multiply|add");
  app.add_option("--param-seed", opt.param_seed);

  app.add_option("--alpha", opt.alpha, "clustering radius coefficient");
  app.add_option("--lidar-min-members", opt.lidar_min_members);
  app.add_option("--image-min-members", opt.image_min_members);
  app.add_option("--connectivity", opt.connectivity, "4 or 8");
  app.add_option("--background-class", opt.background_class, "-1 disables");
  app.add_flag("--size-weighted-sampling", opt.size_weighted_sampling);

  app.add_option("--pos-threshold", opt.pos_threshold);
  app.add_option("--neg-threshold", opt.neg_threshold);
  app.add_option("--neg-per-pos", opt.neg_per_pos);
  app.add_flag("--allow-same-index,!--no-allow-same-index", opt.allow_same_index);

  app.add_option("--lr", opt.learning_rate);
  app.add_option("--epochs", opt.epochs);
  app.add_option("--batch-size", opt.batch_size);
  app.add_option("--beta1", opt.adam_beta1);
  app.add_option("--beta2", opt.adam_beta2);
  app.add_flag("--lr-step-decay", opt.lr_step_decay);
  app.add_option("--lr-decay-factor", opt.lr_decay_factor);
  app.add_option("--lr-decay-every", opt.lr_decay_every);

  app.add_option("--threshold", opt.threshold, "decision threshold");
  app.add_flag("--train-missing,!--no-train", opt.train_enabled,
               "train models (default) instead of requiring checkpoints");
  app.add_flag("--plot", opt.write_plot, "render the P-R curves as SVG");

  app.add_option("--synth-sequences", opt.synth_sequences);
  app.add_option("--synth-frames", opt.synth_frames);
  app.add_option("--synth-step", opt.synth_step);
  app.add_option("--synth-extent", opt.synth_extent);
  app.add_option("--synth-image-size", opt.synth_image_size);
  app.add_option("--synth-density", opt.synth_density);
  app.add_option("--synth-min-points", opt.synth_min_points);
  app.add_option("--synth-lidar-range", opt.synth_lidar_range);
  app.add_option("--synth-focal", opt.synth_focal);

  // nodes
  auto* nodes_cmd = app.add_subcommand("nodes", "extract semantic instance nodes from scenes");
  nodes_cmd->fallthrough();
  std::string scan_path, labels_path, image_path, scene_ref, nodes_out;
  nodes_cmd->add_option("--scan", scan_path, "velodyne .bin file");
  nodes_cmd->add_option("--labels", labels_path, "per-point .label file");
  nodes_cmd->add_option("--image", image_path, "semantic raster (PGM)");
  nodes_cmd->add_option("--scene", scene_ref, "scene id as <sequence>:<frame>");
  nodes_cmd->add_option("--nodes-out", nodes_out, "output file (default stdout)");

  auto* pairs_cmd = app.add_subcommand("pairs", "label image/cloud pairs by pose distance");
  pairs_cmd->fallthrough();
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset on disk");
  synth_cmd->fallthrough();
  auto* train_cmd = app.add_subcommand("train", "train the matching model");
  train_cmd->fallthrough();
  std::string val_sequence;
  train_cmd->add_option("--val-sequence", val_sequence, "hold out one sequence for the log");
  auto* eval_cmd = app.add_subcommand("eval", "leave-one-out evaluation report");
  eval_cmd->fallthrough();
  auto* ablate_cmd = app.add_subcommand("ablate", "evaluation report across all ablation rows");
  ablate_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    std::cerr << "error category=usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (print_config) {
      std::cout << app.config_to_str(true, true);
      return 0;
    }
    if (nodes_cmd->parsed()) {
      return run_nodes(opt, scan_path, labels_path, image_path, scene_ref, nodes_out);
    }
    if (pairs_cmd->parsed()) {
      write_snapshot(app, opt.out_dir);
      return run_pairs(opt);
    }
    if (synth_cmd->parsed()) {
      write_snapshot(app, opt.out_dir);
      return run_synth(opt);
    }
    if (train_cmd->parsed()) {
      write_snapshot(app, opt.out_dir);
      return run_train(opt, val_sequence);
    }
    if (eval_cmd->parsed()) {
      write_snapshot(app, opt.out_dir);
      return run_eval(opt, false);
    }
    if (ablate_cmd->parsed()) {
      write_snapshot(app, opt.out_dir);
      return run_eval(opt, true);
    }
    std::cerr << "error category=usage: one subcommand of "
                 "{nodes, pairs, synth, train, eval, ablate} is required\n";
    std::cerr << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error category=" << e.category() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error category=internal: " << e.what() << "\n";
    return 1;
  }
}
