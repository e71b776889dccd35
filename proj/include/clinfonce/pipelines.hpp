#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"
#include "clinfonce/contrastive.hpp"

namespace clinfonce {

/// Gaussian class blobs with optional label-correlated binary attributes;
/// the desk-scale stand-in for an annotated image corpus.
struct SyntheticDataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  MatrixI attributes;  // n x m (m may be 0)
  std::vector<std::string> sample_ids;
  int num_classes = 0;

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double temperature = 0.1;
  double peak_lr = 0.1;
  int warmup_steps = 100;
  double momentum = 0.95;
  double weight_decay = 1e-4;
  AugmentConfig augment;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Class means sit uniformly on a radius-5 sphere; features add N(0, sigma^2)
/// noise; attribute bits copy a distinct per-class codeword with flip
/// probability attr_noise.
SyntheticDataset gen_synthetic_dataset(int num_classes, int dim, int per_class, int num_attrs,
                                       double attr_noise, double sigma, std::uint64_t seed);

struct TrainResult {
  EncoderModel model;
  std::vector<double> epoch_loss;
};

/// Contrastive training against a fixed partition.
TrainResult train_fixed_clusters(const SyntheticDataset& dataset, const ClusterAssignment& clusters,
                                 const TrainConfig& cfg);

struct KmeansTrainResult {
  EncoderModel model;
  std::vector<double> epoch_loss;
  /// (I(Z;T), H(Z|T)) in bits per refresh: entry 0 is the initial clustering,
  /// entry e the refresh after epoch e. Empty when the dataset has no labels.
  std::vector<std::pair<double, double>> cluster_label_metrics;
  ClusterAssignment final_clusters;
};

/// Training with per-epoch cluster refreshes: the initial partition comes
/// from k-means on the raw features, later ones from k-means on trunk
/// embeddings, cold-started with epoch-indexed seeds.
KmeansTrainResult train_kmeans_clusters(const SyntheticDataset& dataset, int k,
                                        const TrainConfig& cfg);

struct SplitView {
  Matrix features;
  std::vector<int> labels;
};

/// Seeded shuffle split; the first `train_fraction` goes to train.
std::pair<SplitView, SplitView> split_dataset(const SyntheticDataset& dataset,
                                              double train_fraction, std::uint64_t seed);

/// Frozen-trunk linear probe: full-batch softmax regression on embeddings,
/// reporting test top-1 accuracy in [0, 1].
double linear_evaluation(const EncoderModel& model, const SplitView& train_split,
                         const SplitView& test_split, int eval_steps = 500, double eval_lr = 0.5);

struct NamedConfig {
  std::string id;
  ClusterAssignment clusters;
};

struct InterpolationRow {
  std::string config_id;
  int num_clusters = 0;
  double mi_bits = 0.0;
  double cond_entropy_bits = 0.0;
  double mi_norm = 0.0;
  double cond_entropy_norm = 0.0;
  double top1 = 0.0;
};

/// Trains one encoder per configuration, probes it, and reports the cluster
/// diagnostics next to the accuracy. Normalized columns are min-max scaled
/// across the run (all zeros for a single-config run).
std::vector<InterpolationRow> run_interpolation_experiment(const SyntheticDataset& dataset,
                                                           const std::vector<NamedConfig>& configs,
                                                           const TrainConfig& cfg);

/// The 12-point label-derived sweep used to trace accuracy across the
/// information plane: refine x4, merge x2, permute x5, plus instance ids.
std::vector<NamedConfig> standard_interpolation_sweep(const std::vector<int>& labels,
                                                      std::uint64_t seed);

ClusterAssignment instance_clusters(int n);
ClusterAssignment label_clusters(const std::vector<int>& labels);

}  // namespace clinfonce
