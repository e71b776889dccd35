// Command-line surface for the weakly-supervised contrastive toolkit:
// dataset generation, cluster construction, diagnostics, training,
// evaluation, and exact bound verification.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"
#include "clinfonce/contrastive.hpp"
#include "clinfonce/info_metrics.hpp"
#include "clinfonce/io.hpp"
#include "clinfonce/kmeans.hpp"
#include "clinfonce/pipelines.hpp"
#include "clinfonce/theory.hpp"

namespace {

using namespace clinfonce;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerificationFailure = 2;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Writes the payload plus its <out>.manifest.json sidecar.
void write_with_manifest(const std::string& out_path, const std::string& content, bool force,
                         const std::string& command, const json& config, std::uint64_t seed,
                         const std::vector<std::string>& inputs, const Timer& timer) {
  atomic_write_file(out_path, content, force);
  RunManifest manifest;
  manifest.command = command;
  manifest.config_json = config.dump();
  manifest.seed = seed;
  for (const auto& path : inputs) manifest.input_hashes[path] = hash_file(path);
  manifest.duration_seconds = timer.seconds();
  atomic_write_file(out_path + ".manifest.json", manifest_to_json(manifest), true);
}

std::vector<int> compact_label_values(const std::vector<long long>& values) {
  std::map<long long, int> remap;
  for (long long v : values) remap.emplace(v, 0);
  int next = 0;
  for (auto& [value, id] : remap) id = next++;
  std::vector<int> dense;
  dense.reserve(values.size());
  for (long long v : values) dense.push_back(remap.at(v));
  return dense;
}

struct TrainFlags {
  std::string data_path;
  std::string out_path;
  int epochs = 50;
  int batch = 64;
  double temperature = 0.1;
  double lr = 0.1;
  int warmup = 100;
  double momentum = 0.95;
  double weight_decay = 0.0001;
  double aug_noise = 0.1;
  double aug_dropout = 0.0;
  std::uint64_t seed = 0;
  bool force = false;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "dataset CSV")->required();
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--temp", temperature, "softmax temperature");
    cmd->add_option("--lr", lr, "peak learning rate");
    cmd->add_option("--warmup", warmup, "linear warmup steps");
    cmd->add_option("--momentum", momentum, "SGD momentum");
    cmd->add_option("--wd", weight_decay, "weight decay");
    cmd->add_option("--aug-noise", aug_noise, "augmentation noise sigma");
    cmd->add_option("--aug-dropout", aug_dropout, "augmentation dropout probability");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--out", out_path, "output path")->required();
    cmd->add_flag("--force", force, "overwrite existing outputs");
  }

  TrainConfig to_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.temperature = temperature;
    cfg.peak_lr = lr;
    cfg.warmup_steps = warmup;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.augment = {aug_noise, aug_dropout};
    cfg.seed = seed;
    return cfg;
  }

  json to_json() const {
    return {{"epochs", epochs},   {"batch", batch},
            {"temp", temperature}, {"lr", lr},
            {"warmup", warmup},   {"momentum", momentum},
            {"wd", weight_decay}, {"aug_noise", aug_noise},
            {"aug_dropout", aug_dropout}};
  }
};

void require_matching_ids(const std::vector<std::string>& a, const std::vector<std::string>& b,
                          const std::string& what) {
  if (a != b) throw DataError("sample ids disagree between " + what);
}

std::vector<NamedConfig> configs_from_json(const std::string& text,
                                           const SyntheticDataset& dataset) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad configs JSON: ") + e.what());
  }
  if (doc.value("standard_sweep", false))
    return standard_interpolation_sweep(dataset.labels, doc.value("seed", std::uint64_t{0}));

  std::vector<NamedConfig> configs;
  if (!doc.contains("configs")) throw DataError("configs JSON needs a 'configs' array");
  for (const auto& entry : doc.at("configs")) {
    NamedConfig config;
    config.id = entry.at("id").get<std::string>();
    if (entry.contains("file")) {
      auto [ids, clusters] = clusters_from_csv(read_file(entry.at("file").get<std::string>()));
      require_matching_ids(ids, dataset.sample_ids, "dataset and " + config.id);
      config.clusters = std::move(clusters);
    } else {
      std::string scheme = entry.at("scheme").get<std::string>();
      if (scheme == "instance") {
        config.clusters = instance_clusters(dataset.n());
      } else {
        config.clusters = synthesize_configuration(dataset.labels, parse_synth_scheme(scheme),
                                                   entry.at("param").get<double>(),
                                                   entry.value("seed", std::uint64_t{0}));
      }
    }
    configs.push_back(std::move(config));
  }
  return configs;
}

int run_app(int argc, char** argv) {
  CLI::App app{"Cl-InfoNCE weakly-supervised contrastive learning toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic labelled dataset");
  int gd_classes = 4, gd_dim = 16, gd_per_class = 500, gd_attrs = 8;
  double gd_attr_noise = 0.0, gd_sigma = 0.5;
  std::uint64_t gd_seed = 0;
  std::string gd_out;
  bool gd_force = false;
  gen->add_option("--classes", gd_classes, "number of classes");
  gen->add_option("--dim", gd_dim, "feature dimension");
  gen->add_option("--per-class", gd_per_class, "samples per class");
  gen->add_option("--attrs", gd_attrs, "binary attribute count");
  gen->add_option("--attr-noise", gd_attr_noise, "attribute flip probability");
  gen->add_option("--sigma", gd_sigma, "feature noise level");
  gen->add_option("--seed", gd_seed, "RNG seed");
  gen->add_option("--out", gd_out, "output CSV path")->required();
  gen->add_flag("--force", gd_force, "overwrite existing outputs");

  auto* cattr = app.add_subcommand("cluster-attr", "clusters from top-k entropy attributes");
  std::string ca_table, ca_out;
  int ca_topk = 0;
  bool ca_force = false;
  cattr->add_option("--table", ca_table, "attribute table CSV")->required();
  cattr->add_option("--top-k", ca_topk, "number of attributes")->required();
  cattr->add_option("--out", ca_out, "output clusters CSV")->required();
  cattr->add_flag("--force", ca_force, "overwrite existing outputs");

  auto* chier = app.add_subcommand("cluster-hier", "clusters from a class hierarchy level");
  std::string ch_tree, ch_labels, ch_out;
  int ch_level = 1;
  bool ch_force = false;
  chier->add_option("--tree", ch_tree, "hierarchy JSON")->required();
  chier->add_option("--level", ch_level, "tree level (root = 1)")->required();
  chier->add_option("--labels", ch_labels, "CSV with sample_id,label columns")->required();
  chier->add_option("--out", ch_out, "output clusters CSV")->required();
  chier->add_flag("--force", ch_force, "overwrite existing outputs");

  auto* csynth = app.add_subcommand("cluster-synth", "label-derived synthetic clusters");
  std::string cs_labels, cs_scheme, cs_out;
  double cs_param = 1.0;
  std::uint64_t cs_seed = 0;
  bool cs_force = false;
  csynth->add_option("--labels", cs_labels, "CSV with sample_id,label columns")->required();
  csynth->add_option("--scheme", cs_scheme, "refine|merge|permute")->required();
  csynth->add_option("--param", cs_param, "scheme parameter")->required();
  csynth->add_option("--seed", cs_seed, "RNG seed");
  csynth->add_option("--out", cs_out, "output clusters CSV")->required();
  csynth->add_flag("--force", cs_force, "overwrite existing outputs");

  auto* metrics_cmd = app.add_subcommand("metrics", "cluster/label information diagnostics");
  std::string me_clusters, me_labels;
  metrics_cmd->add_option("--clusters", me_clusters, "clusters CSV")->required();
  metrics_cmd->add_option("--labels", me_labels, "CSV with sample_id,label columns")->required();

  auto* train_cmd = app.add_subcommand("train", "contrastive training with fixed clusters");
  TrainFlags tf;
  std::string tr_clusters;
  tf.add_common(train_cmd);
  train_cmd->add_option("--clusters", tr_clusters, "clusters CSV")->required();

  auto* trk_cmd = app.add_subcommand("train-kmeans", "contrastive training with per-epoch k-means");
  TrainFlags tkf;
  int tk_k = 4;
  tkf.add_common(trk_cmd);
  trk_cmd->add_option("--k", tk_k, "number of k-means clusters")->required();

  auto* eval_cmd = app.add_subcommand("eval", "linear evaluation of a checkpoint");
  std::string ev_model, ev_data;
  double ev_split = 0.7;
  std::uint64_t ev_seed = 0;
  eval_cmd->add_option("--model", ev_model, "model checkpoint")->required();
  eval_cmd->add_option("--data", ev_data, "dataset CSV")->required();
  eval_cmd->add_option("--split", ev_split, "train fraction");
  eval_cmd->add_option("--seed", ev_seed, "split seed");

  auto* interp_cmd = app.add_subcommand("interpolate", "information-plane sweep");
  TrainFlags itf;
  std::string it_configs;
  itf.add_common(interp_cmd);
  interp_cmd->add_option("--configs", it_configs, "configurations JSON")->required();

  auto* verify_cmd = app.add_subcommand("verify-bounds", "finite-alphabet bound chain check");
  std::string vb_spec;
  int vb_n = 64, vb_batches = 10000, vb_random = 0, vb_max_alphabet = 6;
  std::uint64_t vb_seed = 0;
  verify_cmd->add_option("--spec", vb_spec, "joint spec JSON");
  verify_cmd->add_option("--n", vb_n, "batch size");
  verify_cmd->add_option("--batches", vb_batches, "Monte-Carlo batches");
  verify_cmd->add_option("--seed", vb_seed, "RNG seed");
  verify_cmd->add_option("--random-specs", vb_random, "additional random specs to sweep");
  verify_cmd->add_option("--max-alphabet", vb_max_alphabet, "max alphabet size for random specs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  }
  Timer timer;

  if (*gen) {
    SyntheticDataset dataset = gen_synthetic_dataset(gd_classes, gd_dim, gd_per_class, gd_attrs,
                                                     gd_attr_noise, gd_sigma, gd_seed);
    json config = {{"classes", gd_classes},       {"dim", gd_dim},
                   {"per_class", gd_per_class},   {"attrs", gd_attrs},
                   {"attr_noise", gd_attr_noise}, {"sigma", gd_sigma}};
    write_with_manifest(gd_out, dataset_to_csv(dataset), gd_force, "gen-data", config, gd_seed, {},
                        timer);
    return kExitOk;
  }

  if (*cattr) {
    AttributeTable table = attribute_table_from_csv(read_file(ca_table));
    ClusterAssignment clusters = clusters_from_topk_attributes(table, ca_topk);
    json config = {{"table", ca_table}, {"top_k", ca_topk}};
    write_with_manifest(ca_out, clusters_to_csv(table.sample_ids, clusters), ca_force,
                        "cluster-attr", config, 0, {ca_table}, timer);
    return kExitOk;
  }

  if (*chier) {
    HierarchyTree tree = hierarchy_from_json(read_file(ch_tree));
    auto [ids, values] = labels_from_csv(read_file(ch_labels));
    ClusterAssignment clusters = clusters_from_hierarchy(tree, ch_level, values);
    json config = {{"tree", ch_tree}, {"level", ch_level}, {"labels", ch_labels}};
    write_with_manifest(ch_out, clusters_to_csv(ids, clusters), ch_force, "cluster-hier", config, 0,
                        {ch_tree, ch_labels}, timer);
    return kExitOk;
  }

  if (*csynth) {
    auto [ids, values] = labels_from_csv(read_file(cs_labels));
    ClusterAssignment clusters = synthesize_configuration(
        compact_label_values(values), parse_synth_scheme(cs_scheme), cs_param, cs_seed);
    json config = {{"labels", cs_labels}, {"scheme", cs_scheme}, {"param", cs_param}};
    write_with_manifest(cs_out, clusters_to_csv(ids, clusters), cs_force, "cluster-synth", config,
                        cs_seed, {cs_labels}, timer);
    return kExitOk;
  }

  if (*metrics_cmd) {
    auto [cluster_ids, clusters] = clusters_from_csv(read_file(me_clusters));
    auto [label_ids, values] = labels_from_csv(read_file(me_labels));
    require_matching_ids(cluster_ids, label_ids, "clusters and labels");
    std::vector<int> dense = compact_label_values(values);
    int num_labels = dense.empty() ? 0 : *std::max_element(dense.begin(), dense.end()) + 1;
    std::cout << clusters.size() << ',' << clusters.num_clusters << ',' << num_labels << ','
              << format_double(entropy(clusters)) << ','
              << format_double(mutual_information(clusters, dense)) << ','
              << format_double(conditional_entropy(clusters, dense)) << "\n";
    return kExitOk;
  }

  if (*train_cmd) {
    SyntheticDataset dataset = dataset_from_csv(read_file(tf.data_path));
    auto [ids, clusters] = clusters_from_csv(read_file(tr_clusters));
    require_matching_ids(dataset.sample_ids, ids, "dataset and clusters");
    TrainResult result = train_fixed_clusters(dataset, clusters, tf.to_config());
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      std::cout << "epoch " << (e + 1) << "/" << result.epoch_loss.size() << " mean_loss "
                << format_double(result.epoch_loss[e]) << "\n";
    json config = tf.to_json();
    config["clusters"] = tr_clusters;
    config["data"] = tf.data_path;
    write_with_manifest(tf.out_path, model_to_json(result.model), tf.force, "train", config,
                        tf.seed, {tf.data_path, tr_clusters}, timer);
    atomic_write_file(tf.out_path + ".loss.csv", loss_trace_to_csv(result.epoch_loss), true);
    return kExitOk;
  }

  if (*trk_cmd) {
    SyntheticDataset dataset = dataset_from_csv(read_file(tkf.data_path));
    KmeansTrainResult result = train_kmeans_clusters(dataset, tk_k, tkf.to_config());
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      std::cout << "epoch " << (e + 1) << "/" << result.epoch_loss.size() << " mean_loss "
                << format_double(result.epoch_loss[e]) << "\n";
    json config = tkf.to_json();
    config["k"] = tk_k;
    config["data"] = tkf.data_path;
    write_with_manifest(tkf.out_path, model_to_json(result.model), tkf.force, "train-kmeans",
                        config, tkf.seed, {tkf.data_path}, timer);
    atomic_write_file(tkf.out_path + ".loss.csv", loss_trace_to_csv(result.epoch_loss), true);
    return kExitOk;
  }

  if (*eval_cmd) {
    EncoderModel model = model_from_json(read_file(ev_model));
    SyntheticDataset dataset = dataset_from_csv(read_file(ev_data));
    if (dataset.labels.empty()) throw DataError("evaluation needs a labelled dataset");
    auto [train_split, test_split] = split_dataset(dataset, ev_split, ev_seed);
    double top1 = linear_evaluation(model, train_split, test_split);
    std::cout << "top1_acc=" << format_double(top1) << "\n";
    return kExitOk;
  }

  if (*interp_cmd) {
    SyntheticDataset dataset = dataset_from_csv(read_file(itf.data_path));
    std::vector<NamedConfig> configs = configs_from_json(read_file(it_configs), dataset);
    std::vector<InterpolationRow> rows =
        run_interpolation_experiment(dataset, configs, itf.to_config());
    json config = itf.to_json();
    config["configs"] = it_configs;
    config["data"] = itf.data_path;
    write_with_manifest(itf.out_path, interpolation_to_csv(rows), itf.force, "interpolate", config,
                        itf.seed, {itf.data_path, it_configs}, timer);
    return kExitOk;
  }

  if (*verify_cmd) {
    if (vb_spec.empty() && vb_random <= 0)
      throw ParameterError("verify-bounds needs --spec and/or --random-specs");
    json out;
    bool ok = true;
    std::string broken;
    if (!vb_spec.empty()) {
      DiscreteJointSpec spec = joint_spec_from_json(read_file(vb_spec));
      BoundReport report = verify_theorem_chain(spec, vb_n, vb_batches, vb_seed);
      out["spec_report"] = json::parse(bound_report_to_json(report));
      if (!report.all_ok) {
        ok = false;
        broken = report.broken_link;
      }
    }
    if (vb_random > 0) {
      // Each swept spec gets a slice of the batch budget; the 3-stderr slack
      // in the chain check widens to match.
      int sweep_batches = std::clamp(vb_batches / 50, 50, vb_batches);
      int violations = 0;
      std::string first_broken;
      for (int s = 0; s < vb_random; ++s) {
        DiscreteJointSpec spec = random_spec(vb_max_alphabet, mix_seed(vb_seed, 1000 + s));
        BoundReport report =
            verify_theorem_chain(spec, vb_n, sweep_batches, mix_seed(vb_seed, 2000 + s));
        if (!report.all_ok) {
          ++violations;
          if (first_broken.empty()) first_broken = report.broken_link;
        }
      }
      out["random_sweep"] = {{"specs", vb_random},
                             {"violations", violations},
                             {"batches_per_spec", sweep_batches},
                             {"first_broken", first_broken}};
      if (violations > 0) {
        ok = false;
        if (broken.empty()) broken = first_broken;
      }
    }
    out["all_ok"] = ok;
    std::cout << out.dump(2) << "\n";
    if (!ok) {
      std::cerr << "bound verification failed: " << broken << "\n";
      return kExitVerificationFailure;
    }
    return kExitOk;
  }

  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
