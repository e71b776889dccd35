#include "clinfonce/cluster_construction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <unordered_map>

#include "clinfonce/rng.hpp"

namespace clinfonce {

namespace {

double bernoulli_entropy_bits(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

ClusterAssignment compact_keys(const std::vector<long long>& keys) {
  ClusterAssignment out;
  out.assignments.resize(keys.size());
  std::unordered_map<long long, int> remap;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, inserted] = remap.emplace(keys[i], static_cast<int>(remap.size()));
    out.assignments[i] = it->second;
  }
  out.num_clusters = static_cast<int>(remap.size());
  return out;
}

}  // namespace

void AttributeTable::validate() const {
  if (n() < 1) throw DataError("attribute table needs at least one sample");
  if (static_cast<int>(sample_ids.size()) != n())
    throw DataError("sample_ids length does not match attribute rows");
  if (static_cast<int>(attribute_names.size()) != m())
    throw DataError("attribute_names length does not match attribute columns");
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < m(); ++j)
      if (attributes(i, j) != 0 && attributes(i, j) != 1)
        throw DataError("attribute entries must be 0 or 1");
  if (labels) {
    if (static_cast<int>(labels->size()) != n()) throw DataError("labels length mismatch");
    std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
    for (int label : *labels) {
      if (label < 0 || label >= num_classes) throw DataError("label outside [0, K)");
      seen[static_cast<std::size_t>(label)] = 1;
    }
    for (int s : seen)
      if (!s) throw DataError("empty class after compaction");
  }
}

void ClusterAssignment::validate() const {
  if (assignments.empty()) throw DataError("empty cluster assignment");
  if (num_clusters < 1) throw DataError("num_clusters must be positive");
  std::vector<int> seen(static_cast<std::size_t>(num_clusters), 0);
  for (int id : assignments) {
    if (id < 0 || id >= num_clusters) throw DataError("cluster id outside [0, C)");
    seen[static_cast<std::size_t>(id)] = 1;
  }
  for (int s : seen)
    if (!s) throw DataError("cluster id range is not dense");
}

ClusterAssignment ClusterAssignment::compacted() const {
  std::vector<long long> keys(assignments.begin(), assignments.end());
  return compact_keys(keys);
}

void HierarchyTree::validate() const {
  if (nodes.empty()) throw DataError("hierarchy has no nodes");
  std::map<int, const HierarchyNode*> by_id;
  int roots = 0;
  for (const auto& node : nodes) {
    if (!by_id.emplace(node.id, &node).second) throw DataError("duplicate node id");
    if (!node.parent) ++roots;
  }
  if (roots != 1) throw DataError("hierarchy must have exactly one root");
  if (!by_id.count(root_id) || by_id.at(root_id)->parent)
    throw DataError("root_id does not name the parentless node");
  // Parent links must reach the root without cycles.
  for (const auto& node : nodes) {
    int steps = 0;
    const HierarchyNode* cur = &node;
    while (cur->parent) {
      auto it = by_id.find(*cur->parent);
      if (it == by_id.end()) throw DataError("parent id not present");
      cur = it->second;
      if (++steps > static_cast<int>(nodes.size())) throw DataError("cycle in parent links");
    }
    if (cur->id != root_id) throw DataError("node disconnected from root");
  }
  std::set<int> leaf_targets;
  std::set<int> parents;
  for (const auto& node : nodes)
    if (node.parent) parents.insert(*node.parent);
  for (const auto& [cls, leaf] : class_to_leaf) {
    if (!by_id.count(leaf)) throw DataError("class maps to unknown node");
    if (parents.count(leaf)) throw DataError("class maps to a non-leaf node");
    if (!leaf_targets.insert(leaf).second) throw DataError("two classes map to the same leaf");
  }
}

int HierarchyTree::level_of(int node_id) const {
  std::map<int, const HierarchyNode*> by_id;
  for (const auto& node : nodes) by_id.emplace(node.id, &node);
  auto it = by_id.find(node_id);
  if (it == by_id.end()) throw DataError("unknown node id");
  int level = 1;
  const HierarchyNode* cur = it->second;
  while (cur->parent) {
    cur = by_id.at(*cur->parent);
    ++level;
  }
  return level;
}

int HierarchyTree::max_leaf_level() const {
  std::set<int> parents;
  for (const auto& node : nodes)
    if (node.parent) parents.insert(*node.parent);
  int max_level = 0;
  for (const auto& node : nodes)
    if (!parents.count(node.id)) max_level = std::max(max_level, level_of(node.id));
  return max_level;
}

std::vector<int> rank_attributes_by_entropy(const AttributeTable& table) {
  table.validate();
  const int m = table.m();
  std::vector<double> entropy(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double p = table.attributes.col(j).cast<double>().mean();
    entropy[static_cast<std::size_t>(j)] = bernoulli_entropy_bits(p);
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double ha = entropy[static_cast<std::size_t>(a)];
    double hb = entropy[static_cast<std::size_t>(b)];
    if (ha != hb) return ha > hb;
    return a < b;
  });
  return order;
}

ClusterAssignment clusters_from_topk_attributes(const AttributeTable& table, int k) {
  if (k < 0 || k > table.m()) throw ParameterError("top-k must lie in [0, m]");
  std::vector<int> ranked = rank_attributes_by_entropy(table);
  ranked.resize(static_cast<std::size_t>(k));

  std::vector<long long> keys(static_cast<std::size_t>(table.n()));
  std::map<std::vector<int>, long long> signature_ids;
  for (int i = 0; i < table.n(); ++i) {
    std::vector<int> sig(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) sig[static_cast<std::size_t>(j)] = table.attributes(i, ranked[static_cast<std::size_t>(j)]);
    auto [it, inserted] = signature_ids.emplace(std::move(sig), static_cast<long long>(signature_ids.size()));
    keys[static_cast<std::size_t>(i)] = it->second;
  }
  return compact_keys(keys);
}

ClusterAssignment clusters_from_hierarchy(const HierarchyTree& tree, int level,
                                          const std::vector<long long>& sample_classes) {
  tree.validate();
  if (sample_classes.empty()) throw DataError("no sample classes given");
  if (level < 1 || level > tree.max_leaf_level())
    throw ParameterError("level outside [1, max leaf level]");

  std::map<int, const HierarchyNode*> by_id;
  for (const auto& node : tree.nodes) by_id.emplace(node.id, &node);

  std::vector<long long> keys;
  keys.reserve(sample_classes.size());
  for (long long cls : sample_classes) {
    auto it = tree.class_to_leaf.find(cls);
    if (it == tree.class_to_leaf.end()) throw DataError("sample class not mapped to a leaf");
    int node_id = it->second;
    int node_level = tree.level_of(node_id);
    while (node_level > level) {
      node_id = *by_id.at(node_id)->parent;
      --node_level;
    }
    keys.push_back(node_id);
  }
  return compact_keys(keys);
}

HierarchyTree prune_dag_to_tree(const std::vector<DagEdge>& edges, int root_id,
                                const std::map<int, std::string>& names,
                                std::map<long long, int> class_to_leaf) {
  if (!names.count(root_id)) throw DataError("root id missing from node names");
  std::map<int, std::vector<int>> parents;
  for (const auto& [id, name] : names) parents[id];
  for (const auto& edge : edges) {
    if (!names.count(edge.child) || !names.count(edge.parent))
      throw DataError("edge references unknown node");
    parents[edge.child].push_back(edge.parent);
  }
  if (!parents[root_id].empty()) throw DataError("root must have no parent");

  // best_path[v]: lexicographically smallest root-to-v name sequence, plus
  // the parent realizing it. DFS with tricolor marking detects cycles.
  std::map<int, std::vector<std::string>> best_path;
  std::map<int, std::optional<int>> best_parent;
  std::map<int, int> state;  // 0 = new, 1 = in progress, 2 = done

  std::function<void(int)> resolve = [&](int v) {
    if (state[v] == 2) return;
    if (state[v] == 1) throw DataError("cycle detected in hierarchy edges");
    state[v] = 1;
    if (v == root_id) {
      best_path[v] = {names.at(v)};
      best_parent[v] = std::nullopt;
    } else {
      if (parents.at(v).empty()) throw DataError("node disconnected from root");
      bool have = false;
      for (int p : parents.at(v)) {
        resolve(p);
        std::vector<std::string> candidate = best_path.at(p);
        candidate.push_back(names.at(v));
        if (!have || candidate < best_path[v] ||
            (candidate == best_path[v] && p < *best_parent[v])) {
          best_path[v] = std::move(candidate);
          best_parent[v] = p;
          have = true;
        }
      }
    }
    state[v] = 2;
  };

  HierarchyTree tree;
  tree.root_id = root_id;
  for (const auto& [id, name] : names) {
    resolve(id);
    HierarchyNode node;
    node.id = id;
    node.parent = best_parent.at(id);
    node.name = name;
    tree.nodes.push_back(std::move(node));
  }
  tree.class_to_leaf = std::move(class_to_leaf);
  tree.validate();
  return tree;
}

SynthScheme parse_synth_scheme(const std::string& name) {
  if (name == "refine") return SynthScheme::Refine;
  if (name == "merge") return SynthScheme::Merge;
  if (name == "permute") return SynthScheme::Permute;
  throw ParameterError("unknown synthesis scheme: " + name);
}

ClusterAssignment synthesize_configuration(const std::vector<int>& labels, SynthScheme scheme,
                                           double param, std::uint64_t seed) {
  if (labels.empty()) throw DataError("labels must be non-empty");
  int num_classes = 0;
  for (int label : labels) {
    if (label < 0) throw DataError("negative label");
    num_classes = std::max(num_classes, label + 1);
  }
  const auto n = labels.size();
  Rng rng(seed);

  switch (scheme) {
    case SynthScheme::Refine: {
      if (param < 1.0 || param != std::floor(param))
        throw ParameterError("refine needs integer subcluster count >= 1");
      const int splits = static_cast<int>(param);
      std::vector<std::vector<int>> members(static_cast<std::size_t>(num_classes));
      for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
      std::vector<long long> keys(n);
      for (int cls = 0; cls < num_classes; ++cls) {
        auto& idx = members[static_cast<std::size_t>(cls)];
        // Seeded shuffle, then round-robin into subclusters keeps sizes
        // within one of each other.
        for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
          auto j = rng.uniform_int(i + 1);
          std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        for (std::size_t pos = 0; pos < idx.size(); ++pos) {
          long long sub = static_cast<long long>(pos) % splits;
          keys[static_cast<std::size_t>(idx[pos])] = static_cast<long long>(cls) * splits + sub;
        }
      }
      return compact_keys(keys);
    }
    case SynthScheme::Merge: {
      if (param < 1.0 || param != std::floor(param))
        throw ParameterError("merge needs integer group size >= 1");
      const int group = static_cast<int>(param);
      std::vector<long long> keys(n);
      for (std::size_t i = 0; i < n; ++i) keys[i] = labels[i] / group;
      return compact_keys(keys);
    }
    case SynthScheme::Permute: {
      if (param < 0.0 || param > 1.0) throw ParameterError("permute fraction must lie in [0, 1]");
      ClusterAssignment base = compact_keys(std::vector<long long>(labels.begin(), labels.end()));
      auto count = static_cast<std::size_t>(std::llround(param * static_cast<double>(n)));
      std::vector<int> order = rng.permutation(static_cast<int>(n));
      std::vector<long long> keys(base.assignments.begin(), base.assignments.end());
      for (std::size_t pick = 0; pick < count; ++pick) {
        auto target = static_cast<std::size_t>(order[pick]);
        keys[target] = rng.uniform_int(base.num_clusters);
      }
      return compact_keys(keys);
    }
  }
  throw ParameterError("unreachable scheme");
}

}  // namespace clinfonce
