#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clinfonce/common.hpp"

namespace clinfonce {

/// Per-sample binary auxiliary attributes plus optional downstream labels.
/// Labels are compacted to a dense [0, K) range at ingestion; class_values
/// keeps the original label value for each dense id.
struct AttributeTable {
  std::vector<std::string> sample_ids;
  MatrixI attributes;  // n x m, entries 0/1
  std::vector<std::string> attribute_names;
  std::optional<std::vector<int>> labels;  // dense ids in [0, num_classes)
  std::vector<long long> class_values;     // original value per dense id
  int num_classes = 0;

  int n() const { return static_cast<int>(attributes.rows()); }
  int m() const { return static_cast<int>(attributes.cols()); }
  void validate() const;
};

/// Partition of the dataset: per-sample cluster ids over a dense id range.
struct ClusterAssignment {
  std::vector<int> assignments;
  int num_clusters = 0;

  int size() const { return static_cast<int>(assignments.size()); }
  /// Checks ids lie in [0, num_clusters) and every id occurs at least once.
  void validate() const;
  /// Relabels ids densely in order of first appearance.
  ClusterAssignment compacted() const;
};

struct HierarchyNode {
  int id = 0;
  std::optional<int> parent;
  std::string name;
};

/// Rooted tree over named nodes; classes map to distinct leaves.
/// level(root) = 1, level(child) = level(parent) + 1.
struct HierarchyTree {
  std::vector<HierarchyNode> nodes;
  int root_id = 0;
  std::map<long long, int> class_to_leaf;

  void validate() const;
  int level_of(int node_id) const;
  int max_leaf_level() const;
};

/// One parent edge per entry; a node may appear in several edges (DAG input).
struct DagEdge {
  int child = 0;
  int parent = 0;
};

/// Attribute indices sorted by descending empirical Bernoulli entropy of the
/// column; ties broken by ascending index.
std::vector<int> rank_attributes_by_entropy(const AttributeTable& table);

/// Groups samples by their bit signature over the k highest-entropy
/// attributes. Cluster ids follow first appearance in sample order.
ClusterAssignment clusters_from_topk_attributes(const AttributeTable& table, int k);

/// Assigns each sample to its leaf's ancestor at the given level (the leaf
/// itself if the leaf sits above that level). sample_classes hold original
/// class values keyed by class_to_leaf.
ClusterAssignment clusters_from_hierarchy(const HierarchyTree& tree, int level,
                                          const std::vector<long long>& sample_classes);

/// Resolves multi-parent nodes by keeping the parent on the lexicographically
/// smallest root-to-node name path. Cycles and unreachable nodes are data
/// errors.
HierarchyTree prune_dag_to_tree(const std::vector<DagEdge>& edges, int root_id,
                                const std::map<int, std::string>& names,
                                std::map<long long, int> class_to_leaf = {});

enum class SynthScheme { Refine, Merge, Permute };

/// Label-derived synthetic partitions used to sweep the information plane:
///   refine  - split each class into `param` random equal-as-possible parts
///   merge   - fuse consecutive class-id groups of size `param`
///   permute - redraw a `param` fraction of base (= label) assignments
///             uniformly over the existing cluster ids
ClusterAssignment synthesize_configuration(const std::vector<int>& labels, SynthScheme scheme,
                                           double param, std::uint64_t seed);

SynthScheme parse_synth_scheme(const std::string& name);

}  // namespace clinfonce
