#pragma once

#include <vector>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"

namespace clinfonce {

/// Empirical joint counts of (cluster, label) pairs.
struct ContingencyTable {
  MatrixI counts;  // C x K
  long long total = 0;

  static ContingencyTable from_pairs(const std::vector<int>& z, const std::vector<int>& t);
  void validate() const;
};

/// Empirical entropy of the cluster marginal, in bits.
double entropy(const ClusterAssignment& assignment);

/// Empirical mutual information between clusters and labels, in bits.
double mutual_information(const ClusterAssignment& z, const std::vector<int>& t);

/// Empirical conditional entropy H(Z|T), in bits.
double conditional_entropy(const ClusterAssignment& z, const std::vector<int>& t);

/// Per-element (v - min) / (max - min); a degenerate range maps to all zeros.
std::vector<double> minmax_normalize(const std::vector<double>& values);

}  // namespace clinfonce
