#include "clinfonce/contrastive.hpp"

#include <cmath>

namespace clinfonce {

namespace {

Matrix apply_activation(const Matrix& z, Activation act) {
  if (act == Activation::Relu) return z.cwiseMax(0.0);
  return z;
}

Matrix activation_grad(const Matrix& z, Activation act) {
  if (act == Activation::Relu) return (z.array() > 0.0).cast<double>().matrix();
  return Matrix::Ones(z.rows(), z.cols());
}

struct StackTrace {
  std::vector<Matrix> pre;   // pre-activation per layer
  std::vector<Matrix> post;  // post-activation per layer (post[0] = input)
};

Matrix forward_stack(const std::vector<DenseLayer>& layers, const Matrix& input,
                     StackTrace* trace) {
  Matrix a = input;
  if (trace) trace->post.push_back(a);
  for (const auto& layer : layers) {
    if (a.cols() != layer.weight.cols()) throw ParameterError("input width does not match layer");
    Matrix z = (a * layer.weight.transpose()).rowwise() + layer.bias.transpose();
    a = apply_activation(z, layer.act);
    if (trace) {
      trace->pre.push_back(std::move(z));
      trace->post.push_back(a);
    }
  }
  return a;
}

// Accumulates parameter gradients for one stack and returns dL/d(input).
Matrix backward_stack(const std::vector<DenseLayer>& layers, const StackTrace& trace,
                      Matrix upstream, std::vector<LayerGrad>& grads) {
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    auto li = static_cast<std::size_t>(l);
    Matrix dz = upstream.cwiseProduct(activation_grad(trace.pre[li], layers[li].act));
    grads[li].weight += dz.transpose() * trace.post[li];
    grads[li].bias += dz.colwise().sum().transpose();
    upstream = dz * layers[li].weight;
  }
  return upstream;
}

std::vector<LayerGrad> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<LayerGrad> out;
  out.reserve(layers.size());
  for (const auto& layer : layers)
    out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                   Vector::Zero(layer.bias.size())});
  return out;
}

}  // namespace

int EncoderModel::input_dim() const {
  if (encoder.empty()) throw ParameterError("model has no encoder layers");
  return static_cast<int>(encoder.front().weight.cols());
}

int EncoderModel::trunk_dim() const {
  if (encoder.empty()) throw ParameterError("model has no encoder layers");
  return static_cast<int>(encoder.back().weight.rows());
}

void EncoderModel::validate() const {
  if (encoder.empty() || projection.empty()) throw ParameterError("model needs both stacks");
  auto check_chain = [](const std::vector<DenseLayer>& layers, Eigen::Index in) {
    for (const auto& layer : layers) {
      if (layer.weight.cols() != in) throw ParameterError("layer dimensions do not chain");
      if (layer.bias.size() != layer.weight.rows()) throw ParameterError("bias size mismatch");
      in = layer.weight.rows();
    }
    return in;
  };
  Eigen::Index trunk_out = check_chain(encoder, encoder.front().weight.cols());
  Eigen::Index head_out = check_chain(projection, trunk_out);
  if (head_out < 2) throw ParameterError("projection output dimension must be >= 2");
  if (hyper.temperature <= 0.0) throw ParameterError("temperature must be positive");
  if (hyper.weight_decay < 0.0) throw ParameterError("weight decay must be >= 0");
  if (hyper.momentum < 0.0 || hyper.momentum >= 1.0) throw ParameterError("momentum must lie in [0, 1)");
}

std::vector<DenseLayer> make_mlp(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ParameterError("mlp needs at least one layer");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(dims[l + 1], dims[l]);
    double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = scale * rng.gaussian();
    layer.bias = Vector::Zero(dims[l + 1]);
    layer.act = (l + 2 < dims.size()) ? Activation::Relu : Activation::Identity;
    layers.push_back(std::move(layer));
  }
  return layers;
}

EncoderModel make_encoder_model(int input_dim, const Hyper& hyper, std::uint64_t seed) {
  if (input_dim < 1) throw ParameterError("input dimension must be >= 1");
  EncoderModel model;
  model.encoder = make_mlp({input_dim, 64, 64}, mix_seed(seed, 0x656e63ULL));
  model.projection = make_mlp({64, 64, 16}, mix_seed(seed, 0x70726f6aULL));
  model.hyper = hyper;
  model.seed = seed;
  model.velocity = zero_grads_like(model);
  model.validate();
  return model;
}

ModelGrads zero_grads_like(const EncoderModel& model) {
  return {zeros_like(model.encoder), zeros_like(model.projection)};
}

Matrix encode(const EncoderModel& model, const Matrix& inputs, EncodeMode mode) {
  Matrix trunk = forward_stack(model.encoder, inputs, nullptr);
  if (mode == EncodeMode::WithoutHead) return trunk;
  return forward_stack(model.projection, trunk, nullptr);
}

void ScheduleSpec::validate() const {
  if (peak_lr <= 0.0) throw ParameterError("peak_lr must be positive");
  if (warmup_steps < 0) throw ParameterError("warmup_steps must be >= 0");
  if (total_steps <= warmup_steps) throw ParameterError("total_steps must exceed warmup_steps");
}

double lr_at(const ScheduleSpec& schedule, int step) {
  schedule.validate();
  if (step < 0 || step > schedule.total_steps) throw ParameterError("step outside schedule range");
  if (step < schedule.warmup_steps)
    return schedule.peak_lr * static_cast<double>(step + 1) / static_cast<double>(schedule.warmup_steps);
  double progress = static_cast<double>(step - schedule.warmup_steps) /
                    static_cast<double>(schedule.total_steps - schedule.warmup_steps);
  return schedule.peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

BackwardResult clinfonce_backward(const EncoderModel& model, const PairBatch& batch) {
  model.validate();
  const Eigen::Index n = batch.anchors.rows();
  if (n < 1 || batch.positives.rows() != n) throw ParameterError("batch views must share row count");
  const double tau = model.hyper.temperature;

  StackTrace enc_a, enc_p, head_a, head_p;
  Matrix trunk_a = forward_stack(model.encoder, batch.anchors, &enc_a);
  Matrix trunk_p = forward_stack(model.encoder, batch.positives, &enc_p);
  Matrix px = forward_stack(model.projection, trunk_a, &head_a);
  Matrix py = forward_stack(model.projection, trunk_p, &head_p);

  Vector nx = px.rowwise().norm();
  Vector ny = py.rowwise().norm();
  if ((nx.array() <= 1e-12).any() || (ny.array() <= 1e-12).any())
    throw NumericError("zero-norm embedding row");
  Matrix ux = px.array().colwise() / nx.array();
  Matrix uy = py.array().colwise() / ny.array();
  Matrix critic = ux * uy.transpose() / tau;
  double loss = clinfonce_loss(critic);

  // dL/dF = (softmax over each row - identity) / n
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = critic.row(i).maxCoeff();
    Eigen::RowVectorXd e = (critic.row(i).array() - m).exp();
    g.row(i) = e / e.sum();
    g(i, i) -= 1.0;
  }
  g /= static_cast<double>(n);

  Matrix dux = g * uy / tau;
  Matrix duy = g.transpose() * ux / tau;

  // Through the row normalization: du = (w - u_hat (u_hat . w)) / r
  Matrix dpx(n, px.cols()), dpy(n, py.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double dot_x = ux.row(i).dot(dux.row(i));
    dpx.row(i) = (dux.row(i) - dot_x * ux.row(i)) / nx(i);
    double dot_y = uy.row(i).dot(duy.row(i));
    dpy.row(i) = (duy.row(i) - dot_y * uy.row(i)) / ny(i);
  }

  BackwardResult result;
  result.loss = loss;
  result.grads = zero_grads_like(model);
  Matrix dtrunk_a = backward_stack(model.projection, head_a, dpx, result.grads.projection);
  Matrix dtrunk_p = backward_stack(model.projection, head_p, dpy, result.grads.projection);
  backward_stack(model.encoder, enc_a, dtrunk_a, result.grads.encoder);
  backward_stack(model.encoder, enc_p, dtrunk_p, result.grads.encoder);
  return result;
}

Vector augment(const Vector& v, const AugmentConfig& cfg, Rng& rng) {
  if (cfg.noise_sigma < 0.0) throw ParameterError("noise sigma must be >= 0");
  if (cfg.dropout_prob < 0.0 || cfg.dropout_prob >= 1.0)
    throw ParameterError("dropout probability must lie in [0, 1)");
  Vector out = v;
  if (cfg.noise_sigma > 0.0)
    for (Eigen::Index j = 0; j < out.size(); ++j) out(j) += cfg.noise_sigma * rng.gaussian();
  if (cfg.dropout_prob > 0.0) {
    double keep_scale = 1.0 / (1.0 - cfg.dropout_prob);
    for (Eigen::Index j = 0; j < out.size(); ++j)
      out(j) = (rng.uniform() < cfg.dropout_prob) ? 0.0 : out(j) * keep_scale;
  }
  return out;
}

PairBatch sample_pair_batch(const Matrix& features, const ClusterAssignment& clusters, int n,
                            const AugmentConfig& cfg, std::uint64_t seed) {
  if (n < 2) throw ParameterError("pair batch needs n >= 2");
  clusters.validate();
  if (clusters.size() != features.rows()) throw DataError("cluster/feature length mismatch");

  std::vector<std::vector<int>> members(static_cast<std::size_t>(clusters.num_clusters));
  for (int i = 0; i < clusters.size(); ++i)
    members[static_cast<std::size_t>(clusters.assignments[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<double> weights(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) weights[c] = static_cast<double>(members[c].size());

  Rng rng(seed);
  PairBatch batch;
  batch.anchors = Matrix(n, features.cols());
  batch.positives = Matrix(n, features.cols());
  batch.cluster_ids.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto z = rng.categorical(weights);
    const auto& pool = members[z];
    int a, b;
    if (pool.size() == 1) {
      a = b = pool.front();
    } else {
      a = pool[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(pool.size())))];
      b = pool[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(pool.size())))];
    }
    batch.anchors.row(i) = augment(features.row(a).transpose(), cfg, rng).transpose();
    batch.positives.row(i) = augment(features.row(b).transpose(), cfg, rng).transpose();
    batch.cluster_ids[static_cast<std::size_t>(i)] = static_cast<int>(z);
  }
  return batch;
}

void sgd_momentum_step(EncoderModel& model, const ModelGrads& grads, double lr) {
  if (lr < 0.0) throw ParameterError("learning rate must be >= 0");
  const double mu = model.hyper.momentum;
  const double wd = model.hyper.weight_decay;
  auto update = [&](std::vector<DenseLayer>& layers, const std::vector<LayerGrad>& g,
                    std::vector<LayerGrad>& v) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      v[l].weight = mu * v[l].weight + (g[l].weight + wd * layers[l].weight);
      v[l].bias = mu * v[l].bias + (g[l].bias + wd * layers[l].bias);
      layers[l].weight -= lr * v[l].weight;
      layers[l].bias -= lr * v[l].bias;
    }
  };
  update(model.encoder, grads.encoder, model.velocity.encoder);
  update(model.projection, grads.projection, model.velocity.projection);
}

}  // namespace clinfonce
