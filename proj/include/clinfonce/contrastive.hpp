#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"
#include "clinfonce/rng.hpp"

namespace clinfonce {

enum class Activation { Identity, Relu };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
  Activation act = Activation::Identity;
};

struct LayerGrad {
  Matrix weight;
  Vector bias;
};

struct ModelGrads {
  std::vector<LayerGrad> encoder;
  std::vector<LayerGrad> projection;
};

struct Hyper {
  double temperature = 0.1;
  double weight_decay = 1e-4;
  double momentum = 0.95;
};

/// MLP trunk plus projection head. The head is used while training the
/// contrastive objective and dropped for evaluation. velocity carries the
/// optimizer's momentum buffers, one per parameter tensor.
struct EncoderModel {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> projection;
  ModelGrads velocity;
  Hyper hyper;
  std::uint64_t seed = 0;

  int input_dim() const;
  int trunk_dim() const;
  void validate() const;
};

/// Trunk d -> 64 -> 64, head 64 -> 64 -> 16, ReLU on hidden layers.
EncoderModel make_encoder_model(int input_dim, const Hyper& hyper, std::uint64_t seed);

/// Arbitrary stack (used by tests and the linear probe); dims has one entry
/// per layer boundary, hidden layers get ReLU, the last layer is linear.
std::vector<DenseLayer> make_mlp(const std::vector<int>& dims, std::uint64_t seed);

enum class EncodeMode { WithHead, WithoutHead };

/// Row-wise forward pass. WithoutHead stops at the trunk output.
Matrix encode(const EncoderModel& model, const Matrix& inputs, EncodeMode mode);

struct PairBatch {
  Matrix anchors;    // n x d
  Matrix positives;  // n x d
  std::vector<int> cluster_ids;
};

struct AugmentConfig {
  double noise_sigma = 0.0;
  double dropout_prob = 0.0;
};

struct ScheduleSpec {
  double peak_lr = 0.1;
  int warmup_steps = 0;
  int total_steps = 1;

  void validate() const;
};

/// Temperature-scaled cosine similarities between all anchor/positive rows.
/// Rows with vanishing norm are rejected as degenerate.
template <typename DerivedA, typename DerivedB>
Matrix critic_matrix(const Eigen::MatrixBase<DerivedA>& px, const Eigen::MatrixBase<DerivedB>& py,
                     double tau) {
  if (tau <= 0.0) throw ParameterError("temperature must be positive");
  if (px.rows() != py.rows() || px.cols() != py.cols())
    throw ParameterError("critic inputs must share shape");
  Vector nx = px.rowwise().norm();
  Vector ny = py.rowwise().norm();
  if ((nx.array() <= 1e-12).any() || (ny.array() <= 1e-12).any())
    throw NumericError("zero-norm embedding row");
  Matrix fx = px.array().colwise() / nx.array();
  Matrix fy = py.array().colwise() / ny.array();
  return fx * fy.transpose() / tau;
}

/// Batch contrastive objective value, negated into a loss. The denominator
/// averages over all columns including the matching one, so the loss is
/// bounded below by -log n. Log-sum-exp is max-shifted.
template <typename Derived>
double clinfonce_loss(const Eigen::MatrixBase<Derived>& critic) {
  const Eigen::Index n = critic.rows();
  if (n < 1 || critic.cols() != n) throw ParameterError("critic matrix must be square");
  if (!critic.allFinite()) throw NumericError("non-finite critic entry");
  const double log_n = std::log(static_cast<double>(n));
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = critic.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) sum += std::exp(critic(i, j) - m);
    // Grouped so a constant critic cancels exactly to zero.
    loss += (m - critic(i, i)) + std::log(sum) - log_n;
  }
  return loss / static_cast<double>(n);
}

/// Loss and the exact parameter gradient for one batch (cosine
/// normalization included; the optimizer owns the weight-decay term).
struct BackwardResult {
  double loss = 0.0;
  ModelGrads grads;
};
BackwardResult clinfonce_backward(const EncoderModel& model, const PairBatch& batch);

ModelGrads zero_grads_like(const EncoderModel& model);

/// One sampled view vector: coordinate noise then inverted-dropout mask.
Vector augment(const Vector& v, const AugmentConfig& cfg, Rng& rng);

/// Draws n slots per the cluster-conditional pairing scheme: a cluster from
/// its empirical frequency, then two member indices independently (identical
/// indices allowed; forced for singleton clusters). Each slot then augments
/// both draws.
PairBatch sample_pair_batch(const Matrix& features, const ClusterAssignment& clusters, int n,
                            const AugmentConfig& cfg, std::uint64_t seed);

/// v <- mu*v + (g + lambda*theta); theta <- theta - lr*v
void sgd_momentum_step(EncoderModel& model, const ModelGrads& grads, double lr);

/// Linear warmup to the peak then cosine decay to zero.
double lr_at(const ScheduleSpec& schedule, int step);

}  // namespace clinfonce
