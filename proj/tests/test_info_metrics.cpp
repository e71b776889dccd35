#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clinfonce/info_metrics.hpp"
#include "clinfonce/rng.hpp"
#include "support/test_util.hpp"

using namespace clinfonce;

namespace {

ClusterAssignment assignment_of(std::vector<int> ids) {
  ClusterAssignment a;
  a.assignments = std::move(ids);
  a.num_clusters = *std::max_element(a.assignments.begin(), a.assignments.end()) + 1;
  return a;
}

std::pair<std::vector<int>, std::vector<int>> random_pair(Rng& rng, int n, int c, int k) {
  std::vector<int> z(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
  // Force every id to appear so the assignment stays dense.
  for (int i = 0; i < n; ++i) {
    z[static_cast<std::size_t>(i)] = (i < c) ? i : static_cast<int>(rng.uniform_int(c));
    t[static_cast<std::size_t>(i)] = (i < k) ? i : static_cast<int>(rng.uniform_int(k));
  }
  return {z, t};
}

}  // namespace

TEST_CASE("entropy on hand cases") {
  CHECK(entropy(assignment_of({0, 0, 1, 1})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy(assignment_of({0, 0, 0, 0})) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(entropy(assignment_of({0, 0, 1, 2})) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("entropy rejects empty assignments") {
  ClusterAssignment empty;
  CHECK_THROWS_AS(entropy(empty), DataError);
}

TEST_CASE("mutual information on hand cases") {
  CHECK(mutual_information(assignment_of({0, 0, 1, 1}), {0, 0, 1, 1}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mutual_information(assignment_of({0, 1, 0, 1}), {0, 0, 1, 1}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mutual_information(assignment_of({0, 0, 1, 2}), {0, 0, 1, 1}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mutual information rejects length mismatch") {
  CHECK_THROWS_AS(mutual_information(assignment_of({0, 1}), {0, 1, 1}), DataError);
}

TEST_CASE("conditional entropy on hand cases") {
  // Z a function of T
  CHECK(conditional_entropy(assignment_of({0, 0, 1, 1}), {0, 1, 2, 3}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // instance ids vs balanced binary labels: log2(4) - 1
  CHECK(conditional_entropy(assignment_of({0, 1, 2, 3}), {0, 0, 1, 1}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(conditional_entropy(assignment_of({0, 0, 1, 2}), {0, 0, 1, 1}) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("minmax normalization") {
  CHECK(minmax_normalize({1, 2, 3}) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(minmax_normalize({5, 5}) == std::vector<double>{0.0, 0.0});
  std::vector<double> out = minmax_normalize({0.2, 0.8, 0.5});
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(1.0));
  CHECK(out[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(minmax_normalize({1.0}), ParameterError);
}

TEST_CASE("chain identity and symmetry over random tables") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 5 + static_cast<int>(rng.uniform_int(60));
    int c = 1 + static_cast<int>(rng.uniform_int(std::min(n, 6)));
    int k = 1 + static_cast<int>(rng.uniform_int(std::min(n, 5)));
    auto [z, t] = random_pair(rng, n, c, k);
    auto az = assignment_of(z);
    auto at = assignment_of(t);
    double h = entropy(az);
    double mi = mutual_information(az, t);
    double ce = conditional_entropy(az, t);
    CHECK(h == doctest::Approx(mi + ce).epsilon(1e-9));
    CHECK(mi == doctest::Approx(mutual_information(at, z)).epsilon(1e-9));
    CHECK(mi >= -1e-12);
    CHECK(ce >= -1e-12);
    CHECK(mi <= std::min(h, entropy(at)) + 1e-9);
  }
}

TEST_CASE("merging two clusters never increases mutual information") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 8 + static_cast<int>(rng.uniform_int(40));
    int c = 2 + static_cast<int>(rng.uniform_int(5));
    int k = 1 + static_cast<int>(rng.uniform_int(4));
    auto [z, t] = random_pair(rng, n, c, k);
    auto az = assignment_of(z);
    int a = static_cast<int>(rng.uniform_int(az.num_clusters));
    int b = static_cast<int>(rng.uniform_int(az.num_clusters));
    if (a == b) b = (b + 1) % az.num_clusters;
    std::vector<int> merged = z;
    for (auto& id : merged)
      if (id == std::max(a, b)) id = std::min(a, b);
    ClusterAssignment am = assignment_of(merged).compacted();
    CHECK(mutual_information(am, t) <= mutual_information(az, t) + 1e-9);
  }
}

TEST_CASE("metrics match the brute-force oracle exactly") {
  Rng rng(51);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 4 + static_cast<int>(rng.uniform_int(30));
    int c = 1 + static_cast<int>(rng.uniform_int(std::min(n, 5)));
    int k = 1 + static_cast<int>(rng.uniform_int(std::min(n, 4)));
    auto [z, t] = random_pair(rng, n, c, k);
    auto az = assignment_of(z);
    CHECK(entropy(az) == testutil::oracle_entropy_bits(z));
    CHECK(mutual_information(az, t) == testutil::oracle_mi_bits(z, t));
    CHECK(conditional_entropy(az, t) == testutil::oracle_conditional_entropy_bits(z, t));
  }
}

TEST_CASE("contingency table validation") {
  ContingencyTable table = ContingencyTable::from_pairs({0, 1, 1}, {0, 0, 1});
  table.validate();
  CHECK(table.total == 3);
  CHECK(table.counts(1, 0) == 1);
  table.total = 5;
  CHECK_THROWS_AS(table.validate(), DataError);
}
