#pragma once

#include <cstdint>
#include <string>

#include "clinfonce/common.hpp"

namespace clinfonce {

/// Exact finite joint model: a latent symbol z, then conditionally
/// independent draws of x and y.
struct DiscreteJointSpec {
  Vector pz;
  Matrix px_given_z;  // |Z| x |X|, row-stochastic
  Matrix py_given_z;  // |Z| x |Y|, row-stochastic

  void validate() const;
  Vector marginal_x() const;
  Vector marginal_y() const;
};

/// Critic cells for zero-mass pairs carry this sentinel; such pairs are
/// never sampled, and exp() underflows them to zero in denominators.
inline constexpr double kLogZeroSentinel = -1e6;

/// q(x, y) = sum_z p(z) p(x|z) p(y|z).
Matrix positive_joint(const DiscreteJointSpec& spec);

/// KL between the positive-pair distribution and the product of marginals,
/// in nats. Returns +inf when a positive-mass cell has zero product mass
/// (impossible for a valid spec).
double kl_pos_vs_product(const DiscreteJointSpec& spec);

struct InfoQuantities {
  double h_z = 0.0;
  double mi_zx = 0.0;
  double mi_zy = 0.0;
  double h_z_given_x = 0.0;
  double h_z_given_y = 0.0;
};

/// Exact plug-in entropies and mutual informations, in nats.
InfoQuantities info_quantities(const DiscreteJointSpec& spec);

/// Log density ratio log(q / (p_x p_y)); the critic achieving the KL bound.
Matrix optimal_critic(const DiscreteJointSpec& spec);

struct EstimateResult {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int batches = 0;
};

/// Monte-Carlo batch objective under a fixed critic table, in nats. Each
/// batch draws n pairs via z ~ p(z), x ~ p(x|z), y ~ p(y|z).
EstimateResult estimate_clinfonce(const DiscreteJointSpec& spec, const Matrix& critic_table,
                                  int batch_size, int num_batches, std::uint64_t seed);

struct BoundReport {
  EstimateResult clinfonce_estimate;
  double kl_exact = 0.0;
  InfoQuantities info;
  bool estimate_le_kl = false;
  bool kl_le_min_mi = false;
  bool min_mi_le_h_z = false;
  bool equality_case = false;
  bool equality_holds = true;  // only meaningful when equality_case
  bool all_ok = false;
  std::string broken_link;  // empty when all_ok
};

/// Checks estimate(f*) <= KL <= min(MI(Z;X), MI(Z;Y)) <= H(Z), with
/// 3-stderr slack on the Monte-Carlo link and 1e-9 on exact links. When
/// H(Z|X) = H(Z|Y) = 0 additionally requires KL = H(Z).
BoundReport verify_theorem_chain(const DiscreteJointSpec& spec, int batch_size, int num_batches,
                                 std::uint64_t seed);

/// Seeded random spec with alphabet sizes in [2, max_alphabet].
DiscreteJointSpec random_spec(int max_alphabet, std::uint64_t seed);

}  // namespace clinfonce
