#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clinfonce/cluster_construction.hpp"
#include "clinfonce/common.hpp"
#include "clinfonce/contrastive.hpp"
#include "clinfonce/pipelines.hpp"
#include "clinfonce/theory.hpp"

namespace clinfonce {

/// FNV-1a over raw bytes, hex encoded; used for manifest input hashes.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

std::string read_file(const std::string& path);

/// Writes via a temp file in the same directory plus rename. Refuses to
/// replace an existing file unless force is set.
void atomic_write_file(const std::string& path, const std::string& content, bool force);

// ---- CSV formats ----

std::string dataset_to_csv(const SyntheticDataset& dataset);
SyntheticDataset dataset_from_csv(const std::string& text);

/// Any CSV with sample_id,label,... columns; every column that is neither
/// sample_id, label nor a feature column f<digits> is taken as an attribute.
AttributeTable attribute_table_from_csv(const std::string& text);

std::string clusters_to_csv(const std::vector<std::string>& sample_ids,
                            const ClusterAssignment& assignment);
std::pair<std::vector<std::string>, ClusterAssignment> clusters_from_csv(const std::string& text);

/// Raw (uncompacted) label column keyed by sample id, for hierarchy lookups.
std::pair<std::vector<std::string>, std::vector<long long>> labels_from_csv(const std::string& text);

std::string loss_trace_to_csv(const std::vector<double>& epoch_loss);
std::string interpolation_to_csv(const std::vector<InterpolationRow>& rows);
std::string centroids_to_csv(const Matrix& centroids);

// ---- JSON formats ----

HierarchyTree hierarchy_from_json(const std::string& text);

inline constexpr const char* kModelMagic = "CLINF1";
std::string model_to_json(const EncoderModel& model);
EncoderModel model_from_json(const std::string& text);

DiscreteJointSpec joint_spec_from_json(const std::string& text);
std::string bound_report_to_json(const BoundReport& report);

struct RunManifest {
  std::string command;
  std::string config_json;  // resolved flag values, serialized object
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  double duration_seconds = 0.0;
};

std::string manifest_to_json(const RunManifest& manifest);
/// Recomputes input hashes and throws DataError on any mismatch.
void check_manifest_inputs(const std::string& manifest_json);

}  // namespace clinfonce
