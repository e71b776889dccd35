#include "clinfonce/kmeans.hpp"

#include <cmath>
#include <limits>

#include "clinfonce/rng.hpp"

namespace clinfonce {

namespace {

int nearest_centroid(const Matrix& centroids, const Eigen::RowVectorXd& point) {
  int best = 0;
  double best_d = (centroids.row(0) - point).squaredNorm();
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
  const auto n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  auto first = rng.uniform_int(n);
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;

  Vector dist2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = dist2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2(i);
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with chosen centroids; take the first
      // unchosen one so duplicates still yield k distinct slots.
      pick = -1;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      if (pick < 0) pick = rng.uniform_int(n);
    }
    centroids.row(c) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    dist2 = dist2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

// Gives every empty cluster the point farthest from its current centroid,
// never draining a donor below one member.
void reseed_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<int>& assignment,
                           std::vector<int>& counts) {
  const int k = static_cast<int>(centroids.rows());
  for (int rounds = 0; rounds < k; ++rounds) {
    int empty = -1;
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] == 0) {
        empty = c;
        break;
      }
    if (empty < 0) return;
    double best_d = -1.0;
    Eigen::Index best_i = -1;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      int owner = assignment[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
      double d = (points.row(i) - centroids.row(owner)).squaredNorm();
      if (d > best_d) {
        best_d = d;
        best_i = i;
      }
    }
    if (best_i < 0) return;  // k > n only; guarded by caller
    int donor = assignment[static_cast<std::size_t>(best_i)];
    centroids.row(empty) = points.row(best_i);
    assignment[static_cast<std::size_t>(best_i)] = empty;
    counts[static_cast<std::size_t>(donor)] -= 1;
    counts[static_cast<std::size_t>(empty)] += 1;
  }
}

}  // namespace

namespace {

KmeansResult kmeans_single_run(const Matrix& points, int k, std::uint64_t seed, int max_iters,
                               double tol) {
  const auto n = points.rows();
  Rng rng(seed);
  Matrix centroids = kmeanspp_init(points, k, rng);
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  std::vector<int> counts;

  KmeansResult result;
  double prev_inertia = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    counts.assign(static_cast<std::size_t>(k), 0);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int c = nearest_centroid(centroids, points.row(i));
      assignment[static_cast<std::size_t>(i)] = c;
      counts[static_cast<std::size_t>(c)] += 1;
      inertia += (points.row(i) - centroids.row(c)).squaredNorm();
    }
    result.inertia_trace.push_back(inertia);

    bool converged = std::isfinite(prev_inertia) &&
                     (prev_inertia - inertia) <= tol * std::max(prev_inertia, 1e-300);
    prev_inertia = inertia;
    if (converged) {
      ++iter;
      break;
    }

    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c).setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      centroids.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    reseed_empty_clusters(points, centroids, assignment, counts);
  }

  // Final inertia against the centroids actually returned.
  counts.assign(static_cast<std::size_t>(k), 0);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = nearest_centroid(centroids, points.row(i));
    assignment[static_cast<std::size_t>(i)] = c;
    counts[static_cast<std::size_t>(c)] += 1;
  }
  reseed_empty_clusters(points, centroids, assignment, counts);
  for (Eigen::Index i = 0; i < n; ++i)
    inertia += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();

  result.assignment.assignments = assignment;
  result.assignment.num_clusters = k;
  result.assignment.validate();
  result.centroids = centroids;
  result.inertia = inertia;
  result.iterations_run = iter;
  return result;
}

}  // namespace

KmeansResult kmeans_fit(const Matrix& points, int k, std::uint64_t seed, int max_iters, double tol,
                        int n_init) {
  if (k < 1 || k > points.rows()) throw ParameterError("k must lie in [1, n]");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (tol < 0.0) throw ParameterError("tol must be >= 0");
  if (n_init < 1) throw ParameterError("n_init must be >= 1");
  if (!points.allFinite()) throw DataError("non-finite point coordinates");

  KmeansResult best;
  for (int r = 0; r < n_init; ++r) {
    KmeansResult run = kmeans_single_run(points, k, mix_seed(seed, static_cast<std::uint64_t>(r)),
                                         max_iters, tol);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

ClusterAssignment kmeans_assign(const Matrix& centroids, const Matrix& points) {
  if (centroids.cols() != points.cols()) throw ParameterError("centroid/point width mismatch");
  if (centroids.rows() < 1) throw ParameterError("need at least one centroid");
  ClusterAssignment out;
  out.assignments.resize(static_cast<std::size_t>(points.rows()));
  out.num_clusters = static_cast<int>(centroids.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.assignments[static_cast<std::size_t>(i)] = nearest_centroid(centroids, points.row(i));
  return out;
}

}  // namespace clinfonce
