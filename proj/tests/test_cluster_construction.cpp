#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/info_metrics.hpp"
#include "clinfonce/rng.hpp"
#include "support/test_util.hpp"

using namespace clinfonce;

namespace {

AttributeTable table_from_columns(const std::vector<std::vector<int>>& columns) {
  AttributeTable table;
  const int n = static_cast<int>(columns.front().size());
  const int m = static_cast<int>(columns.size());
  table.attributes = MatrixI(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) table.attributes(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  for (int i = 0; i < n; ++i) table.sample_ids.push_back("s" + std::to_string(i));
  for (int j = 0; j < m; ++j) table.attribute_names.push_back("a" + std::to_string(j));
  return table;
}

HierarchyTree small_tree() {
  // root -> {A, B}, A -> {c1, c2}, B -> {c3}
  HierarchyTree tree;
  tree.nodes = {{0, std::nullopt, "root"}, {1, 0, "A"},  {2, 0, "B"},
                {3, 1, "c1"},              {4, 1, "c2"}, {5, 2, "c3"}};
  tree.root_id = 0;
  tree.class_to_leaf = {{1, 3}, {2, 4}, {3, 5}};
  return tree;
}

std::vector<int> random_labels(Rng& rng, int n, int k) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] = (i < k) ? i : static_cast<int>(rng.uniform_int(k));
  return labels;
}

}  // namespace

TEST_CASE("entropy ranking orders fair coin above skewed above constant") {
  auto table = table_from_columns({{1, 1, 1, 1}, {1, 0, 0, 0}, {1, 1, 0, 0}});
  auto order = rank_attributes_by_entropy(table);
  CHECK(order == std::vector<int>{2, 1, 0});
}

TEST_CASE("entropy ranking breaks ties by ascending index") {
  auto table = table_from_columns({{1, 0, 0}, {1, 0, 0}});
  auto order = rank_attributes_by_entropy(table);
  CHECK(order == std::vector<int>{0, 1});
}

TEST_CASE("entropy ranking is a permutation with non-increasing entropies") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + static_cast<int>(rng.uniform_int(20));
    int m = 1 + static_cast<int>(rng.uniform_int(8));
    AttributeTable table;
    table.attributes = MatrixI(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) table.attributes(i, j) = rng.uniform() < 0.4 ? 1 : 0;
    for (int i = 0; i < n; ++i) table.sample_ids.push_back("s" + std::to_string(i));
    for (int j = 0; j < m; ++j) table.attribute_names.push_back("a" + std::to_string(j));

    auto order = rank_attributes_by_entropy(table);
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int j = 0; j < m; ++j) CHECK(sorted[static_cast<std::size_t>(j)] == j);

    auto column_entropy = [&](int j) {
      double p = table.attributes.col(j).cast<double>().mean();
      double h = 0.0;
      if (p > 0.0) h -= p * std::log2(p);
      if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
      return h;
    };
    for (std::size_t j = 0; j + 1 < order.size(); ++j)
      CHECK(column_entropy(order[j]) >= column_entropy(order[j + 1]) - 1e-12);
  }
}

TEST_CASE("empty attribute set ranks to an empty list") {
  AttributeTable table;
  table.attributes = MatrixI(2, 0);
  table.sample_ids = {"a", "b"};
  CHECK(rank_attributes_by_entropy(table).empty());
}

TEST_CASE("top-k signature clusters") {
  auto table = table_from_columns({{1, 1, 0}, {0, 0, 1}});

  SUBCASE("k = 0 collapses everything into one cluster") {
    auto clusters = clusters_from_topk_attributes(table, 0);
    CHECK(clusters.num_clusters == 1);
    CHECK(clusters.assignments == std::vector<int>{0, 0, 0});
  }
  SUBCASE("k = 1 uses the tie-broken first attribute") {
    auto clusters = clusters_from_topk_attributes(table, 1);
    CHECK(clusters.num_clusters == 2);
    CHECK(clusters.assignments == std::vector<int>{0, 0, 1});
  }
  SUBCASE("k beyond m is a parameter error") {
    CHECK_THROWS_AS(clusters_from_topk_attributes(table, 3), ParameterError);
  }
}

TEST_CASE("distinct rows at k = m give one cluster per sample") {
  auto table = table_from_columns({{0, 0, 1, 1}, {0, 1, 0, 1}});
  auto clusters = clusters_from_topk_attributes(table, 2);
  CHECK(clusters.num_clusters == 4);
}

TEST_CASE("increasing k refines the partition") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 6 + static_cast<int>(rng.uniform_int(30));
    int m = 2 + static_cast<int>(rng.uniform_int(6));
    AttributeTable table;
    table.attributes = MatrixI(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) table.attributes(i, j) = rng.uniform() < 0.5 ? 1 : 0;
    for (int i = 0; i < n; ++i) table.sample_ids.push_back("s" + std::to_string(i));
    for (int j = 0; j < m; ++j) table.attribute_names.push_back("a" + std::to_string(j));
    for (int k = 0; k < m; ++k) {
      auto coarse = clusters_from_topk_attributes(table, k);
      auto fine = clusters_from_topk_attributes(table, k + 1);
      CHECK(testutil::refines(fine, coarse));
    }
  }
}

TEST_CASE("hierarchy clusters by level") {
  HierarchyTree tree = small_tree();
  std::vector<long long> classes = {1, 2, 3};

  SUBCASE("level 1 puts everything under the root") {
    auto clusters = clusters_from_hierarchy(tree, 1, classes);
    CHECK(clusters.num_clusters == 1);
  }
  SUBCASE("level 2 groups by subtree") {
    auto clusters = clusters_from_hierarchy(tree, 2, classes);
    CHECK(clusters.assignments == std::vector<int>{0, 0, 1});
    CHECK(clusters.num_clusters == 2);
  }
  SUBCASE("max leaf level recovers the classes") {
    auto clusters = clusters_from_hierarchy(tree, tree.max_leaf_level(), classes);
    CHECK(clusters.num_clusters == 3);
    CHECK(clusters.assignments == std::vector<int>{0, 1, 2});
  }
  SUBCASE("deeper levels refine shallower ones") {
    std::vector<long long> samples = {1, 1, 2, 3, 2, 1};
    for (int level = 1; level < tree.max_leaf_level(); ++level) {
      auto coarse = clusters_from_hierarchy(tree, level, samples);
      auto fine = clusters_from_hierarchy(tree, level + 1, samples);
      CHECK(testutil::refines(fine, coarse));
    }
  }
  SUBCASE("unmapped class is a data error") {
    CHECK_THROWS_AS(clusters_from_hierarchy(tree, 2, {1, 99}), DataError);
  }
  SUBCASE("level outside the tree is a parameter error") {
    CHECK_THROWS_AS(clusters_from_hierarchy(tree, 0, classes), ParameterError);
    CHECK_THROWS_AS(clusters_from_hierarchy(tree, 7, classes), ParameterError);
  }
}

TEST_CASE("dag pruning") {
  std::map<int, std::string> names = {{0, "root"}, {1, "animal"}, {2, "artifact"}, {3, "X"}};

  SUBCASE("a tree passes through unchanged") {
    std::vector<DagEdge> edges = {{1, 0}, {2, 0}, {3, 1}};
    HierarchyTree tree = prune_dag_to_tree(edges, 0, names);
    for (const auto& node : tree.nodes)
      if (node.id == 3) CHECK(*node.parent == 1);
  }
  SUBCASE("multi-parent node keeps the lexicographically smaller path") {
    std::vector<DagEdge> edges = {{1, 0}, {2, 0}, {3, 1}, {3, 2}};
    HierarchyTree tree = prune_dag_to_tree(edges, 0, names);
    for (const auto& node : tree.nodes)
      if (node.id == 3) CHECK(*node.parent == 1);  // "animal" < "artifact"
  }
  SUBCASE("cycles are data errors") {
    std::vector<DagEdge> edges = {{1, 0}, {2, 1}, {1, 2}, {3, 2}};
    CHECK_THROWS_AS(prune_dag_to_tree(edges, 0, names), DataError);
  }
  SUBCASE("disconnected nodes are data errors") {
    std::vector<DagEdge> edges = {{1, 0}, {3, 1}};
    CHECK_THROWS_AS(prune_dag_to_tree(edges, 0, names), DataError);
  }
}

TEST_CASE("refine with s = 1 reproduces the labels") {
  std::vector<int> labels = {0, 0, 1, 1, 2};
  auto clusters = synthesize_configuration(labels, SynthScheme::Refine, 1, 42);
  CHECK(clusters.assignments == labels);
  CHECK(clusters.num_clusters == 3);
}

TEST_CASE("merge with g = K collapses to one cluster") {
  std::vector<int> labels = {0, 1, 2, 3, 0, 1};
  auto clusters = synthesize_configuration(labels, SynthScheme::Merge, 4, 0);
  CHECK(clusters.num_clusters == 1);
  CHECK(mutual_information(clusters, labels) == doctest::Approx(0.0));
  CHECK(conditional_entropy(clusters, labels) == doctest::Approx(0.0));
}

TEST_CASE("full permutation of uniform labels destroys the information") {
  Rng rng(5);
  std::vector<int> labels = random_labels(rng, 10000, 4);
  auto clusters = synthesize_configuration(labels, SynthScheme::Permute, 1.0, 9);
  CHECK(mutual_information(clusters, labels) < 0.01);
}

TEST_CASE("refine keeps I at H(T) and bounds the added conditional entropy") {
  Rng rng(17);
  for (int s : {1, 2, 3, 5}) {
    std::vector<int> labels = random_labels(rng, 400, 5);
    auto clusters = synthesize_configuration(labels, SynthScheme::Refine, s, 100 + s);
    ClusterAssignment label_part;
    label_part.assignments = labels;
    label_part.num_clusters = 5;
    CHECK(mutual_information(clusters, labels) ==
          doctest::Approx(entropy(label_part)).epsilon(1e-9));
    CHECK(conditional_entropy(clusters, labels) <= std::log2(static_cast<double>(s)) + 1e-9);
  }
}

TEST_CASE("merge keeps conditional entropy at zero") {
  Rng rng(19);
  for (int g : {1, 2, 3}) {
    std::vector<int> labels = random_labels(rng, 300, 6);
    auto clusters = synthesize_configuration(labels, SynthScheme::Merge, g, 0);
    CHECK(conditional_entropy(clusters, labels) <= 1e-9);
  }
}

TEST_CASE("synthesis is deterministic per seed and validates parameters") {
  std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
  auto a = synthesize_configuration(labels, SynthScheme::Permute, 0.5, 7);
  auto b = synthesize_configuration(labels, SynthScheme::Permute, 0.5, 7);
  CHECK(a.assignments == b.assignments);
  CHECK_THROWS_AS(synthesize_configuration(labels, SynthScheme::Refine, 0, 0), ParameterError);
  CHECK_THROWS_AS(synthesize_configuration(labels, SynthScheme::Refine, 1.5, 0), ParameterError);
  CHECK_THROWS_AS(synthesize_configuration(labels, SynthScheme::Permute, 1.5, 0), ParameterError);
  CHECK_THROWS_AS(synthesize_configuration({}, SynthScheme::Refine, 1, 0), DataError);
}

TEST_CASE("cluster assignment validation and compaction") {
  ClusterAssignment sparse;
  sparse.assignments = {0, 2, 2};
  sparse.num_clusters = 3;
  CHECK_THROWS_AS(sparse.validate(), DataError);
  ClusterAssignment dense = sparse.compacted();
  dense.validate();
  CHECK(dense.assignments == std::vector<int>{0, 1, 1});
  CHECK(dense.num_clusters == 2);
}
