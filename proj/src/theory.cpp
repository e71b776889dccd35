#include "clinfonce/theory.hpp"

#include <cmath>
#include <limits>

#include "clinfonce/rng.hpp"

namespace clinfonce {

namespace {

void check_stochastic_row(const Eigen::RowVectorXd& row, const char* what) {
  if ((row.array() < 0.0).any()) throw DataError(std::string(what) + " has a negative entry");
  if (std::abs(row.sum() - 1.0) > 1e-12) throw DataError(std::string(what) + " does not sum to 1");
}

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

void DiscreteJointSpec::validate() const {
  if (pz.size() < 1 || px_given_z.rows() != pz.size() || py_given_z.rows() != pz.size())
    throw DataError("conditional rows must match |Z|");
  if (px_given_z.cols() < 1 || py_given_z.cols() < 1) throw DataError("empty alphabet");
  check_stochastic_row(pz.transpose(), "p(z)");
  for (Eigen::Index z = 0; z < pz.size(); ++z) {
    check_stochastic_row(px_given_z.row(z), "p(x|z)");
    check_stochastic_row(py_given_z.row(z), "p(y|z)");
  }
}

Vector DiscreteJointSpec::marginal_x() const { return px_given_z.transpose() * pz; }
Vector DiscreteJointSpec::marginal_y() const { return py_given_z.transpose() * pz; }

Matrix positive_joint(const DiscreteJointSpec& spec) {
  spec.validate();
  return spec.px_given_z.transpose() * spec.pz.asDiagonal() * spec.py_given_z;
}

double kl_pos_vs_product(const DiscreteJointSpec& spec) {
  Matrix q = positive_joint(spec);
  Vector px = spec.marginal_x();
  Vector py = spec.marginal_y();
  double kl = 0.0;
  for (Eigen::Index x = 0; x < q.rows(); ++x)
    for (Eigen::Index y = 0; y < q.cols(); ++y) {
      if (q(x, y) <= 0.0) continue;
      double denom = px(x) * py(y);
      if (denom <= 0.0) return std::numeric_limits<double>::infinity();
      kl += q(x, y) * std::log(q(x, y) / denom);
    }
  return kl;
}

InfoQuantities info_quantities(const DiscreteJointSpec& spec) {
  spec.validate();
  InfoQuantities out;
  for (Eigen::Index z = 0; z < spec.pz.size(); ++z) out.h_z -= xlogx(spec.pz(z));

  Vector px = spec.marginal_x();
  Vector py = spec.marginal_y();
  for (Eigen::Index z = 0; z < spec.pz.size(); ++z) {
    for (Eigen::Index x = 0; x < spec.px_given_z.cols(); ++x) {
      double joint = spec.pz(z) * spec.px_given_z(z, x);
      if (joint > 0.0) out.mi_zx += joint * std::log(joint / (spec.pz(z) * px(x)));
    }
    for (Eigen::Index y = 0; y < spec.py_given_z.cols(); ++y) {
      double joint = spec.pz(z) * spec.py_given_z(z, y);
      if (joint > 0.0) out.mi_zy += joint * std::log(joint / (spec.pz(z) * py(y)));
    }
  }
  out.h_z_given_x = out.h_z - out.mi_zx;
  out.h_z_given_y = out.h_z - out.mi_zy;
  return out;
}

Matrix optimal_critic(const DiscreteJointSpec& spec) {
  Matrix q = positive_joint(spec);
  Vector px = spec.marginal_x();
  Vector py = spec.marginal_y();
  Matrix critic(q.rows(), q.cols());
  for (Eigen::Index x = 0; x < q.rows(); ++x)
    for (Eigen::Index y = 0; y < q.cols(); ++y) {
      double denom = px(x) * py(y);
      critic(x, y) = (q(x, y) > 0.0 && denom > 0.0) ? std::log(q(x, y) / denom) : kLogZeroSentinel;
    }
  return critic;
}

EstimateResult estimate_clinfonce(const DiscreteJointSpec& spec, const Matrix& critic_table,
                                  int batch_size, int num_batches, std::uint64_t seed) {
  spec.validate();
  if (batch_size < 2) throw ParameterError("batch size must be >= 2");
  if (num_batches < 1) throw ParameterError("need at least one batch");
  if (critic_table.rows() != spec.px_given_z.cols() || critic_table.cols() != spec.py_given_z.cols())
    throw ParameterError("critic table shape does not match alphabets");

  std::vector<double> pz_w(static_cast<std::size_t>(spec.pz.size()));
  for (Eigen::Index z = 0; z < spec.pz.size(); ++z) pz_w[static_cast<std::size_t>(z)] = spec.pz(z);
  auto row_weights = [](const Matrix& m, std::size_t r) {
    std::vector<double> w(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) w[static_cast<std::size_t>(c)] = m(static_cast<Eigen::Index>(r), c);
    return w;
  };

  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  std::vector<int> xs(static_cast<std::size_t>(batch_size)), ys(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < num_batches; ++b) {
    for (int i = 0; i < batch_size; ++i) {
      std::size_t z = rng.categorical(pz_w);
      xs[static_cast<std::size_t>(i)] = static_cast<int>(rng.categorical(row_weights(spec.px_given_z, z)));
      ys[static_cast<std::size_t>(i)] = static_cast<int>(rng.categorical(row_weights(spec.py_given_z, z)));
    }
    double value = 0.0;
    const double log_n = std::log(static_cast<double>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < batch_size; ++j)
        m = std::max(m, critic_table(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]));
      double lse_sum = 0.0;
      for (int j = 0; j < batch_size; ++j)
        lse_sum += std::exp(critic_table(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]) - m);
      // Grouped so a constant critic cancels exactly to zero.
      value += (critic_table(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]) - m) -
               std::log(lse_sum) + log_n;
    }
    value /= static_cast<double>(batch_size);
    sum += value;
    sum_sq += value * value;
  }

  EstimateResult result;
  result.batches = num_batches;
  result.mean = sum / num_batches;
  if (num_batches > 1) {
    double var = (sum_sq - sum * sum / num_batches) / (num_batches - 1);
    result.stderr_of_mean = std::sqrt(std::max(var, 0.0) / num_batches);
  }
  return result;
}

BoundReport verify_theorem_chain(const DiscreteJointSpec& spec, int batch_size, int num_batches,
                                 std::uint64_t seed) {
  BoundReport report;
  Matrix critic = optimal_critic(spec);
  report.clinfonce_estimate = estimate_clinfonce(spec, critic, batch_size, num_batches, seed);
  report.kl_exact = kl_pos_vs_product(spec);
  report.info = info_quantities(spec);

  constexpr double kExactSlack = 1e-9;
  double min_mi = std::min(report.info.mi_zx, report.info.mi_zy);
  report.estimate_le_kl = report.clinfonce_estimate.mean <=
                          report.kl_exact + 3.0 * report.clinfonce_estimate.stderr_of_mean;
  report.kl_le_min_mi = report.kl_exact <= min_mi + kExactSlack;
  report.min_mi_le_h_z = min_mi <= report.info.h_z + kExactSlack;
  report.equality_case =
      report.info.h_z_given_x <= kExactSlack && report.info.h_z_given_y <= kExactSlack;
  if (report.equality_case)
    report.equality_holds = std::abs(report.kl_exact - report.info.h_z) <= kExactSlack;

  if (!report.estimate_le_kl)
    report.broken_link = "estimate <= kl";
  else if (!report.kl_le_min_mi)
    report.broken_link = "kl <= min(mi_zx, mi_zy)";
  else if (!report.min_mi_le_h_z)
    report.broken_link = "min(mi_zx, mi_zy) <= h_z";
  else if (!report.equality_holds)
    report.broken_link = "equality case kl == h_z";
  report.all_ok = report.broken_link.empty();
  return report;
}

DiscreteJointSpec random_spec(int max_alphabet, std::uint64_t seed) {
  if (max_alphabet < 2) throw ParameterError("max alphabet must be >= 2");
  Rng rng(seed);
  auto draw_size = [&] { return 2 + static_cast<int>(rng.uniform_int(max_alphabet - 1)); };
  int nz = draw_size(), nx = draw_size(), ny = draw_size();

  auto dirichlet_row = [&](Eigen::Index len) {
    Eigen::RowVectorXd row(len);
    for (Eigen::Index i = 0; i < len; ++i) row(i) = -std::log(1.0 - rng.uniform());
    return Eigen::RowVectorXd(row / row.sum());
  };

  DiscreteJointSpec spec;
  spec.pz = dirichlet_row(nz).transpose();
  spec.px_given_z = Matrix(nz, nx);
  spec.py_given_z = Matrix(nz, ny);
  for (int z = 0; z < nz; ++z) {
    spec.px_given_z.row(z) = dirichlet_row(nx);
    spec.py_given_z.row(z) = dirichlet_row(ny);
  }
  spec.validate();
  return spec;
}

}  // namespace clinfonce
