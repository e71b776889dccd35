#include "clinfonce/info_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace clinfonce {

ContingencyTable ContingencyTable::from_pairs(const std::vector<int>& z, const std::vector<int>& t) {
  if (z.size() != t.size()) throw DataError("cluster/label length mismatch");
  if (z.empty()) throw DataError("empty pair list");
  int num_z = 0, num_t = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || t[i] < 0) throw DataError("negative id");
    num_z = std::max(num_z, z[i] + 1);
    num_t = std::max(num_t, t[i] + 1);
  }
  ContingencyTable table;
  table.counts = MatrixI::Zero(num_z, num_t);
  for (std::size_t i = 0; i < z.size(); ++i) table.counts(z[i], t[i]) += 1;
  table.total = static_cast<long long>(z.size());
  return table;
}

void ContingencyTable::validate() const {
  if (total < 1) throw DataError("contingency total must be >= 1");
  long long sum = 0;
  for (Eigen::Index r = 0; r < counts.rows(); ++r)
    for (Eigen::Index c = 0; c < counts.cols(); ++c) {
      if (counts(r, c) < 0) throw DataError("negative count");
      sum += counts(r, c);
    }
  if (sum != total) throw DataError("counts do not sum to total");
}

double entropy(const ClusterAssignment& assignment) {
  assignment.validate();
  const double n = static_cast<double>(assignment.size());
  std::vector<long long> counts(static_cast<std::size_t>(assignment.num_clusters), 0);
  for (int id : assignment.assignments) counts[static_cast<std::size_t>(id)] += 1;
  double h = 0.0;
  for (long long c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

// Plug-in estimates: p(z,t) = count/n, marginals from row/column sums.
// Term arrangement is the canonical textbook form so that independent
// count-based recomputations reproduce it bit for bit.
double mutual_information(const ClusterAssignment& z, const std::vector<int>& t) {
  z.validate();
  ContingencyTable table = ContingencyTable::from_pairs(z.assignments, t);
  const double n = static_cast<double>(table.total);
  Eigen::VectorXi row = table.counts.rowwise().sum();
  Eigen::VectorXi col = table.counts.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index zi = 0; zi < table.counts.rows(); ++zi)
    for (Eigen::Index ti = 0; ti < table.counts.cols(); ++ti) {
      int c = table.counts(zi, ti);
      if (c == 0) continue;
      double joint = static_cast<double>(c) / n;
      double pz = static_cast<double>(row(zi)) / n;
      double pt = static_cast<double>(col(ti)) / n;
      mi += joint * std::log2(joint / (pz * pt));
    }
  return mi;
}

double conditional_entropy(const ClusterAssignment& z, const std::vector<int>& t) {
  z.validate();
  ContingencyTable table = ContingencyTable::from_pairs(z.assignments, t);
  const double n = static_cast<double>(table.total);
  Eigen::VectorXi col = table.counts.colwise().sum();
  double h = 0.0;
  for (Eigen::Index ti = 0; ti < table.counts.cols(); ++ti) {
    if (col(ti) == 0) continue;
    double inner = 0.0;
    for (Eigen::Index zi = 0; zi < table.counts.rows(); ++zi) {
      int c = table.counts(zi, ti);
      if (c == 0) continue;
      double p = static_cast<double>(c) / static_cast<double>(col(ti));
      inner -= p * std::log2(p);
    }
    h += static_cast<double>(col(ti)) / n * inner;
  }
  return h;
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
  if (values.size() < 2) throw ParameterError("min-max normalization needs at least two values");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

}  // namespace clinfonce
