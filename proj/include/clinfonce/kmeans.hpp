#pragma once

#include <cstdint>
#include <vector>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"

namespace clinfonce {

struct KmeansResult {
  ClusterAssignment assignment;
  Matrix centroids;  // k x p
  double inertia = 0.0;
  int iterations_run = 0;
  std::vector<double> inertia_trace;  // one entry per Lloyd assignment pass
};

/// Lloyd iterations from seeded k-means++ starts, best of n_init restarts by
/// inertia. Empty clusters are re-seeded to the point farthest from its
/// centroid (donor keeps >= 1 member), so every returned centroid owns at
/// least one point.
KmeansResult kmeans_fit(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100,
                        double tol = 1e-6, int n_init = 10);

/// Nearest-centroid labels for fresh points; ties go to the lowest centroid
/// index. Ids are centroid indices, so unused centroids leave gaps - compact
/// before feeding the result to consumers that need a dense range.
ClusterAssignment kmeans_assign(const Matrix& centroids, const Matrix& points);

}  // namespace clinfonce
