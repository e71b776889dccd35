#include "clinfonce/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "clinfonce/info_metrics.hpp"
#include "clinfonce/kmeans.hpp"
#include "clinfonce/rng.hpp"

namespace clinfonce {

namespace {

constexpr std::uint64_t kModelTag = 0x6d6f64656cULL;
constexpr std::uint64_t kBatchTag = 0x6261746368ULL;
constexpr std::uint64_t kKmeansTag = 0x6b6d65616e73ULL;
constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;

int steps_per_epoch(int n_data, int batch_size) {
  return std::max(1, n_data / batch_size);
}

std::vector<std::pair<double, double>> maybe_metrics(const SyntheticDataset& dataset,
                                                     const ClusterAssignment& clusters) {
  std::vector<std::pair<double, double>> out;
  if (!dataset.labels.empty()) {
    out.emplace_back(mutual_information(clusters, dataset.labels),
                     conditional_entropy(clusters, dataset.labels));
  }
  return out;
}

// A zero peak rate skips the schedule entirely (frozen-weights smoke runs).
ScheduleSpec make_schedule(const TrainConfig& cfg, int total_steps) {
  ScheduleSpec schedule{cfg.peak_lr > 0.0 ? cfg.peak_lr : 1.0, cfg.warmup_steps, total_steps};
  if (schedule.total_steps <= schedule.warmup_steps) schedule.warmup_steps = schedule.total_steps - 1;
  return schedule;
}

void run_training_epoch(EncoderModel& model, const Matrix& features,
                        const ClusterAssignment& clusters, const TrainConfig& cfg,
                        const ScheduleSpec& schedule, int steps, int& global_step,
                        std::vector<double>& epoch_loss) {
  double loss_sum = 0.0;
  for (int s = 0; s < steps; ++s) {
    std::uint64_t batch_seed = mix_seed(mix_seed(cfg.seed, kBatchTag), static_cast<std::uint64_t>(global_step));
    PairBatch batch = sample_pair_batch(features, clusters, cfg.batch_size, cfg.augment, batch_seed);
    BackwardResult back = clinfonce_backward(model, batch);
    double lr = cfg.peak_lr > 0.0 ? lr_at(schedule, global_step) : 0.0;
    sgd_momentum_step(model, back.grads, lr);
    loss_sum += back.loss;
    ++global_step;
  }
  epoch_loss.push_back(loss_sum / static_cast<double>(steps));
}

}  // namespace

void SyntheticDataset::validate() const {
  if (n() < 1) throw DataError("dataset is empty");
  if (!features.allFinite()) throw DataError("non-finite feature values");
  if (!labels.empty()) {
    if (static_cast<int>(labels.size()) != n()) throw DataError("label count mismatch");
    std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
    for (int label : labels) {
      if (label < 0 || label >= num_classes) throw DataError("label outside [0, K)");
      seen[static_cast<std::size_t>(label)] = 1;
    }
    for (int s : seen)
      if (!s) throw DataError("empty class");
  }
  if (attributes.size() > 0 && attributes.rows() != n()) throw DataError("attribute row mismatch");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (batch_size < 2) throw ParameterError("batch size must be >= 2");
  if (temperature <= 0.0) throw ParameterError("temperature must be positive");
  if (peak_lr < 0.0) throw ParameterError("learning rate must be >= 0");
  if (warmup_steps < 0) throw ParameterError("warmup must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ParameterError("weight decay must be >= 0");
}

SyntheticDataset gen_synthetic_dataset(int num_classes, int dim, int per_class, int num_attrs,
                                       double attr_noise, double sigma, std::uint64_t seed) {
  if (num_classes < 2) throw ParameterError("need at least two classes");
  if (dim < 2) throw ParameterError("need feature dimension >= 2");
  if (per_class < 2) throw ParameterError("need at least two samples per class");
  if (num_attrs < 0) throw ParameterError("attribute count must be >= 0");
  if (attr_noise < 0.0 || attr_noise >= 0.5) throw ParameterError("attr_noise must lie in [0, 0.5)");
  if (sigma < 0.0) throw ParameterError("sigma must be >= 0");
  if (num_attrs > 0 && num_attrs < 63 && (1LL << num_attrs) < num_classes)
    throw ParameterError("2^attrs must cover the class count for distinct codewords");

  Rng rng(seed);
  const int n = num_classes * per_class;

  Matrix means(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    Vector v(dim);
    for (int j = 0; j < dim; ++j) v(j) = rng.gaussian();
    double norm = v.norm();
    if (norm <= 1e-12) norm = 1.0;
    means.row(c) = (5.0 / norm) * v.transpose();
  }

  // Distinct per-class codewords drawn by seeded rejection.
  std::vector<std::vector<int>> codewords;
  if (num_attrs > 0) {
    std::set<std::vector<int>> used;
    while (static_cast<int>(codewords.size()) < num_classes) {
      std::vector<int> word(static_cast<std::size_t>(num_attrs));
      for (int j = 0; j < num_attrs; ++j) word[static_cast<std::size_t>(j)] = rng.uniform() < 0.5 ? 1 : 0;
      if (used.insert(word).second) codewords.push_back(std::move(word));
    }
  }

  SyntheticDataset dataset;
  dataset.num_classes = num_classes;
  dataset.features = Matrix(n, dim);
  dataset.labels.resize(static_cast<std::size_t>(n));
  dataset.attributes = MatrixI(n, num_attrs);
  dataset.sample_ids.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int cls = i / per_class;
    dataset.labels[static_cast<std::size_t>(i)] = cls;
    for (int j = 0; j < dim; ++j) dataset.features(i, j) = means(cls, j) + sigma * rng.gaussian();
    for (int j = 0; j < num_attrs; ++j) {
      int bit = codewords[static_cast<std::size_t>(cls)][static_cast<std::size_t>(j)];
      if (rng.uniform() < attr_noise) bit = 1 - bit;
      dataset.attributes(i, j) = bit;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%06d", i);
    dataset.sample_ids[static_cast<std::size_t>(i)] = buf;
  }
  dataset.validate();
  return dataset;
}

TrainResult train_fixed_clusters(const SyntheticDataset& dataset, const ClusterAssignment& clusters,
                                 const TrainConfig& cfg) {
  dataset.validate();
  cfg.validate();
  clusters.validate();
  if (clusters.size() != dataset.n()) throw DataError("cluster/dataset length mismatch");

  Hyper hyper{cfg.temperature, cfg.weight_decay, cfg.momentum};
  TrainResult result{make_encoder_model(dataset.dim(), hyper, mix_seed(cfg.seed, kModelTag)), {}};

  const int steps = steps_per_epoch(dataset.n(), cfg.batch_size);
  ScheduleSpec schedule = make_schedule(cfg, cfg.epochs * steps);

  int global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    run_training_epoch(result.model, dataset.features, clusters, cfg, schedule, steps, global_step,
                       result.epoch_loss);
  return result;
}

KmeansTrainResult train_kmeans_clusters(const SyntheticDataset& dataset, int k,
                                        const TrainConfig& cfg) {
  dataset.validate();
  cfg.validate();
  if (k < 1 || k > dataset.n()) throw ParameterError("k must lie in [1, n]");

  Hyper hyper{cfg.temperature, cfg.weight_decay, cfg.momentum};
  KmeansTrainResult result;
  result.model = make_encoder_model(dataset.dim(), hyper, mix_seed(cfg.seed, kModelTag));

  const int steps = steps_per_epoch(dataset.n(), cfg.batch_size);
  ScheduleSpec schedule = make_schedule(cfg, cfg.epochs * steps);

  std::uint64_t kmeans_base = mix_seed(cfg.seed, kKmeansTag);
  ClusterAssignment clusters =
      kmeans_fit(dataset.features, k, mix_seed(kmeans_base, 0)).assignment;
  for (auto& metric : maybe_metrics(dataset, clusters)) result.cluster_label_metrics.push_back(metric);

  int global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    run_training_epoch(result.model, dataset.features, clusters, cfg, schedule, steps, global_step,
                       result.epoch_loss);
    Matrix embeddings = encode(result.model, dataset.features, EncodeMode::WithoutHead);
    clusters = kmeans_fit(embeddings, k, mix_seed(kmeans_base, static_cast<std::uint64_t>(epoch) + 1))
                   .assignment;
    for (auto& metric : maybe_metrics(dataset, clusters)) result.cluster_label_metrics.push_back(metric);
  }
  result.final_clusters = clusters;
  return result;
}

std::pair<SplitView, SplitView> split_dataset(const SyntheticDataset& dataset,
                                              double train_fraction, std::uint64_t seed) {
  dataset.validate();
  if (dataset.labels.empty()) throw DataError("split needs labels");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ParameterError("train fraction must lie in (0, 1)");
  Rng rng(mix_seed(seed, kSplitTag));
  std::vector<int> order = rng.permutation(dataset.n());
  int n_train = static_cast<int>(std::llround(train_fraction * dataset.n()));
  n_train = std::clamp(n_train, 1, dataset.n() - 1);

  auto take = [&](int begin, int end) {
    SplitView view;
    view.features = Matrix(end - begin, dataset.dim());
    view.labels.resize(static_cast<std::size_t>(end - begin));
    for (int i = begin; i < end; ++i) {
      view.features.row(i - begin) = dataset.features.row(order[static_cast<std::size_t>(i)]);
      view.labels[static_cast<std::size_t>(i - begin)] =
          dataset.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    return view;
  };
  return {take(0, n_train), take(n_train, dataset.n())};
}

double linear_evaluation(const EncoderModel& model, const SplitView& train_split,
                         const SplitView& test_split, int eval_steps, double eval_lr) {
  if (train_split.features.rows() < 1 || test_split.features.rows() < 1)
    throw DataError("both splits must be non-empty");
  if (eval_steps < 1) throw ParameterError("eval_steps must be >= 1");

  Matrix train_emb = encode(model, train_split.features, EncodeMode::WithoutHead);
  Matrix test_emb = encode(model, test_split.features, EncodeMode::WithoutHead);

  int num_classes = 0;
  for (int label : train_split.labels) num_classes = std::max(num_classes, label + 1);
  for (int label : test_split.labels) num_classes = std::max(num_classes, label + 1);
  const auto n = train_emb.rows();
  const auto p = train_emb.cols();

  // Convex softmax regression; zero init and full-batch steps keep the probe
  // deterministic without an RNG.
  Matrix w = Matrix::Zero(num_classes, p);
  Vector b = Vector::Zero(num_classes);
  for (int step = 0; step < eval_steps; ++step) {
    Matrix logits = (train_emb * w.transpose()).rowwise() + b.transpose();
    Matrix probs(n, num_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = logits.row(i).maxCoeff();
      Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
      probs.row(i) = e / e.sum();
    }
    for (Eigen::Index i = 0; i < n; ++i) probs(i, train_split.labels[static_cast<std::size_t>(i)]) -= 1.0;
    probs /= static_cast<double>(n);
    w -= eval_lr * (probs.transpose() * train_emb);
    b -= eval_lr * probs.colwise().sum().transpose();
  }

  Matrix logits = (test_emb * w.transpose()).rowwise() + b.transpose();
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == test_split.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

std::vector<InterpolationRow> run_interpolation_experiment(const SyntheticDataset& dataset,
                                                           const std::vector<NamedConfig>& configs,
                                                           const TrainConfig& cfg) {
  dataset.validate();
  if (dataset.labels.empty()) throw DataError("interpolation experiment needs labels");
  if (configs.empty()) throw ParameterError("no configurations given");

  std::vector<InterpolationRow> rows;
  for (const auto& config : configs) {
    try {
      config.clusters.validate();
      if (config.clusters.size() != dataset.n()) throw DataError("configuration length mismatch");
      InterpolationRow row;
      row.config_id = config.id;
      row.num_clusters = config.clusters.num_clusters;
      row.mi_bits = mutual_information(config.clusters, dataset.labels);
      row.cond_entropy_bits = conditional_entropy(config.clusters, dataset.labels);
      TrainResult trained = train_fixed_clusters(dataset, config.clusters, cfg);
      auto [train_split, test_split] = split_dataset(dataset, 0.7, cfg.seed);
      row.top1 = linear_evaluation(trained.model, train_split, test_split);
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw DataError("configuration '" + config.id + "' failed: " + e.what());
    }
  }

  if (rows.size() >= 2) {
    std::vector<double> mi, ce;
    for (const auto& row : rows) {
      mi.push_back(row.mi_bits);
      ce.push_back(row.cond_entropy_bits);
    }
    std::vector<double> mi_n = minmax_normalize(mi);
    std::vector<double> ce_n = minmax_normalize(ce);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].mi_norm = mi_n[i];
      rows[i].cond_entropy_norm = ce_n[i];
    }
  }
  return rows;
}

ClusterAssignment instance_clusters(int n) {
  if (n < 1) throw ParameterError("need at least one sample");
  ClusterAssignment out;
  out.assignments.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.assignments[static_cast<std::size_t>(i)] = i;
  out.num_clusters = n;
  return out;
}

ClusterAssignment label_clusters(const std::vector<int>& labels) {
  return synthesize_configuration(labels, SynthScheme::Refine, 1.0, 0);
}

std::vector<NamedConfig> standard_interpolation_sweep(const std::vector<int>& labels,
                                                      std::uint64_t seed) {
  std::vector<NamedConfig> configs;
  int idx = 0;
  auto synth = [&](const std::string& id, SynthScheme scheme, double param) {
    configs.push_back({id, synthesize_configuration(labels, scheme, param,
                                                    mix_seed(seed, static_cast<std::uint64_t>(idx)))});
    ++idx;
  };
  synth("refine_s1", SynthScheme::Refine, 1);
  synth("refine_s2", SynthScheme::Refine, 2);
  synth("merge_g2", SynthScheme::Merge, 2);
  synth("permute_p00625", SynthScheme::Permute, 0.0625);
  synth("permute_p0125", SynthScheme::Permute, 0.125);
  synth("permute_p025", SynthScheme::Permute, 0.25);
  synth("permute_p0375", SynthScheme::Permute, 0.375);
  synth("permute_p05", SynthScheme::Permute, 0.5);
  synth("permute_p0625", SynthScheme::Permute, 0.625);
  synth("permute_p075", SynthScheme::Permute, 0.75);
  synth("permute_p0875", SynthScheme::Permute, 0.875);
  synth("permute_p1", SynthScheme::Permute, 1.0);
  return configs;
}

}  // namespace clinfonce
