#include "clinfonce/io.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace clinfonce {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw DataError("empty CSV");
  return rows;
}

long long parse_ll(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad integer for ") + what + ": '" + s + "'");
  }
}

double parse_dbl(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad number for ") + what + ": '" + s + "'");
  }
}

bool is_feature_column(const std::string& name) {
  if (name.size() < 2 || name[0] != 'f') return false;
  for (std::size_t i = 1; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
  return true;
}

json layers_to_json(const std::vector<DenseLayer>& layers) {
  json arr = json::array();
  for (const auto& layer : layers) {
    json entry;
    entry["out"] = layer.weight.rows();
    entry["in"] = layer.weight.cols();
    entry["act"] = layer.act == Activation::Relu ? "relu" : "identity";
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    entry["w"] = w;
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    entry["b"] = b;
    arr.push_back(std::move(entry));
  }
  return arr;
}

std::vector<DenseLayer> layers_from_json(const json& arr) {
  std::vector<DenseLayer> layers;
  for (const auto& entry : arr) {
    DenseLayer layer;
    Eigen::Index out = entry.at("out").get<Eigen::Index>();
    Eigen::Index in = entry.at("in").get<Eigen::Index>();
    std::string act = entry.at("act").get<std::string>();
    if (act == "relu")
      layer.act = Activation::Relu;
    else if (act == "identity")
      layer.act = Activation::Identity;
    else
      throw DataError("unknown activation tag: " + act);
    auto w = entry.at("w").get<std::vector<double>>();
    auto b = entry.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != out * in || static_cast<Eigen::Index>(b.size()) != out)
      throw DataError("layer payload size mismatch");
    layer.weight = Matrix(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = w[static_cast<std::size_t>(r * in + c)];
    layer.bias = Eigen::Map<const Vector>(b.data(), out);
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_file(const std::string& path) { return fnv1a_hex(read_file(path)); }

void atomic_write_file(const std::string& path, const std::string& content, bool force) {
  namespace fs = std::filesystem;
  if (!force && fs::exists(path)) throw DataError("refusing to overwrite existing file: " + path);
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw DataError("short write: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string dataset_to_csv(const SyntheticDataset& dataset) {
  std::ostringstream out;
  out << "sample_id,label";
  for (int j = 0; j < dataset.dim(); ++j) out << ",f" << j;
  for (int j = 0; j < dataset.attributes.cols(); ++j) out << ",attr_" << j;
  out << "\n";
  for (int i = 0; i < dataset.n(); ++i) {
    out << dataset.sample_ids[static_cast<std::size_t>(i)] << ',';
    if (!dataset.labels.empty()) out << dataset.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < dataset.dim(); ++j) out << ',' << format_double(dataset.features(i, j));
    for (int j = 0; j < dataset.attributes.cols(); ++j) out << ',' << dataset.attributes(i, j);
    out << "\n";
  }
  return out.str();
}

SyntheticDataset dataset_from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label")
    throw DataError("dataset CSV must start with sample_id,label");

  std::vector<int> feature_cols, attr_cols;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (is_feature_column(header[c]))
      feature_cols.push_back(static_cast<int>(c));
    else
      attr_cols.push_back(static_cast<int>(c));
  }
  if (feature_cols.empty()) throw DataError("dataset CSV has no feature columns");

  const int n = static_cast<int>(rows.size()) - 1;
  if (n < 1) throw DataError("dataset CSV has no rows");
  SyntheticDataset dataset;
  dataset.features = Matrix(n, static_cast<int>(feature_cols.size()));
  dataset.attributes = MatrixI(n, static_cast<int>(attr_cols.size()));
  dataset.sample_ids.resize(static_cast<std::size_t>(n));

  std::vector<long long> raw_labels;
  bool any_label = false, all_labels = true;
  for (int i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    if (row.size() != header.size()) throw DataError("ragged CSV row");
    dataset.sample_ids[static_cast<std::size_t>(i)] = row[0];
    if (row[1].empty()) {
      all_labels = false;
      raw_labels.push_back(0);
    } else {
      any_label = true;
      raw_labels.push_back(parse_ll(row[1], "label"));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j)
      dataset.features(i, static_cast<int>(j)) =
          parse_dbl(row[static_cast<std::size_t>(feature_cols[j])], "feature");
    for (std::size_t j = 0; j < attr_cols.size(); ++j) {
      const std::string& cell = row[static_cast<std::size_t>(attr_cols[j])];
      if (cell != "0" && cell != "1") throw DataError("attribute cells must be 0 or 1");
      dataset.attributes(i, static_cast<int>(j)) = cell == "1" ? 1 : 0;
    }
  }
  if (any_label && !all_labels) throw DataError("label column must be all set or all empty");
  if (any_label) {
    std::map<long long, int> remap;
    for (long long v : raw_labels) remap.emplace(v, 0);
    int next = 0;
    for (auto& [value, dense] : remap) dense = next++;
    dataset.labels.reserve(raw_labels.size());
    for (long long v : raw_labels) dataset.labels.push_back(remap.at(v));
    dataset.num_classes = next;
  }
  dataset.validate();
  return dataset;
}

AttributeTable attribute_table_from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "sample_id" || header[1] != "label")
    throw DataError("attribute CSV must start with sample_id,label");

  std::vector<int> attr_cols;
  for (std::size_t c = 2; c < header.size(); ++c)
    if (!is_feature_column(header[c])) attr_cols.push_back(static_cast<int>(c));

  const int n = static_cast<int>(rows.size()) - 1;
  if (n < 1) throw DataError("attribute CSV has no rows");
  AttributeTable table;
  table.attributes = MatrixI(n, static_cast<int>(attr_cols.size()));
  table.sample_ids.resize(static_cast<std::size_t>(n));
  for (int c : attr_cols) table.attribute_names.push_back(header[static_cast<std::size_t>(c)]);

  std::vector<long long> raw_labels;
  bool any_label = false, all_labels = true;
  for (int i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    if (row.size() != header.size()) throw DataError("ragged CSV row");
    table.sample_ids[static_cast<std::size_t>(i)] = row[0];
    if (row[1].empty()) {
      all_labels = false;
      raw_labels.push_back(0);
    } else {
      any_label = true;
      raw_labels.push_back(parse_ll(row[1], "label"));
    }
    for (std::size_t j = 0; j < attr_cols.size(); ++j) {
      const std::string& cell = row[static_cast<std::size_t>(attr_cols[j])];
      if (cell != "0" && cell != "1") throw DataError("attribute cells must be 0 or 1");
      table.attributes(i, static_cast<int>(j)) = cell == "1" ? 1 : 0;
    }
  }
  if (any_label && !all_labels) throw DataError("label column must be all set or all empty");
  if (any_label) {
    std::map<long long, int> remap;
    for (long long v : raw_labels) remap.emplace(v, 0);
    int next = 0;
    for (auto& [value, dense] : remap) {
      dense = next++;
      table.class_values.push_back(value);
    }
    std::vector<int> labels;
    labels.reserve(raw_labels.size());
    for (long long v : raw_labels) labels.push_back(remap.at(v));
    table.labels = std::move(labels);
    table.num_classes = next;
  }
  table.validate();
  return table;
}

std::string clusters_to_csv(const std::vector<std::string>& sample_ids,
                            const ClusterAssignment& assignment) {
  if (sample_ids.size() != assignment.assignments.size())
    throw DataError("sample id count does not match assignment length");
  std::ostringstream out;
  out << "sample_id,cluster_id\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i)
    out << sample_ids[i] << ',' << assignment.assignments[i] << "\n";
  return out.str();
}

std::pair<std::vector<std::string>, ClusterAssignment> clusters_from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  const auto& header = rows.front();
  if (header.size() != 2 || header[0] != "sample_id" || header[1] != "cluster_id")
    throw DataError("cluster CSV must have header sample_id,cluster_id");
  std::vector<std::string> ids;
  std::vector<long long> raw;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw DataError("ragged CSV row");
    ids.push_back(rows[i][0]);
    raw.push_back(parse_ll(rows[i][1], "cluster_id"));
  }
  if (ids.empty()) throw DataError("cluster CSV has no rows");
  // Ids are compacted on ingestion so downstream invariants hold even for
  // hand-edited files.
  std::map<long long, int> remap;
  ClusterAssignment assignment;
  for (long long v : raw) {
    auto [it, inserted] = remap.emplace(v, static_cast<int>(remap.size()));
    assignment.assignments.push_back(it->second);
  }
  assignment.num_clusters = static_cast<int>(remap.size());
  return {std::move(ids), std::move(assignment)};
}

std::pair<std::vector<std::string>, std::vector<long long>> labels_from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "sample_id" || header[1] != "label")
    throw DataError("label CSV must start with sample_id,label");
  std::vector<std::string> ids;
  std::vector<long long> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != header.size()) throw DataError("ragged CSV row");
    if (rows[i][1].empty()) throw DataError("missing label for sample " + rows[i][0]);
    ids.push_back(rows[i][0]);
    labels.push_back(parse_ll(rows[i][1], "label"));
  }
  if (ids.empty()) throw DataError("label CSV has no rows");
  return {std::move(ids), std::move(labels)};
}

std::string loss_trace_to_csv(const std::vector<double>& epoch_loss) {
  std::ostringstream out;
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e)
    out << (e + 1) << ',' << format_double(epoch_loss[e]) << "\n";
  return out.str();
}

std::string interpolation_to_csv(const std::vector<InterpolationRow>& rows) {
  std::ostringstream out;
  out << "config_id,num_clusters,I_ZT_bits,H_ZgT_bits,I_norm,H_norm,top1_acc\n";
  for (const auto& row : rows) {
    out << row.config_id << ',' << row.num_clusters << ',' << format_double(row.mi_bits) << ','
        << format_double(row.cond_entropy_bits) << ',' << format_double(row.mi_norm) << ','
        << format_double(row.cond_entropy_norm) << ',' << format_double(row.top1) << "\n";
  }
  return out.str();
}

std::string centroids_to_csv(const Matrix& centroids) {
  std::ostringstream out;
  out << "centroid_id";
  for (Eigen::Index j = 0; j < centroids.cols(); ++j) out << ",c" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < centroids.cols(); ++j) out << ',' << format_double(centroids(i, j));
    out << "\n";
  }
  return out.str();
}

HierarchyTree hierarchy_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad hierarchy JSON: ") + e.what());
  }
  try {
    int root = doc.at("root").get<int>();
    std::map<int, std::string> names;
    std::vector<DagEdge> edges;
    for (const auto& node : doc.at("nodes")) {
      int id = node.at("id").get<int>();
      if (!names.emplace(id, node.at("name").get<std::string>()).second)
        throw DataError("duplicate node id in hierarchy JSON");
      const auto& parent = node.at("parent");
      if (parent.is_null()) continue;
      if (parent.is_array())
        for (const auto& p : parent) edges.push_back({id, p.get<int>()});
      else
        edges.push_back({id, parent.get<int>()});
    }
    std::map<long long, int> class_to_leaf;
    if (doc.contains("class_to_leaf"))
      for (const auto& [key, value] : doc.at("class_to_leaf").items())
        class_to_leaf[std::stoll(key)] = value.get<int>();
    return prune_dag_to_tree(edges, root, names, std::move(class_to_leaf));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad hierarchy JSON: ") + e.what());
  }
}

std::string model_to_json(const EncoderModel& model) {
  json doc;
  doc["magic"] = kModelMagic;
  doc["encoder"] = layers_to_json(model.encoder);
  doc["projection"] = layers_to_json(model.projection);
  doc["hyper"] = {{"temperature", model.hyper.temperature},
                  {"weight_decay", model.hyper.weight_decay},
                  {"momentum", model.hyper.momentum}};
  doc["seed"] = model.seed;
  return doc.dump(2) + "\n";
}

EncoderModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  try {
    if (doc.at("magic").get<std::string>() != kModelMagic)
      throw DataError("not a model checkpoint (bad magic)");
    EncoderModel model;
    model.encoder = layers_from_json(doc.at("encoder"));
    model.projection = layers_from_json(doc.at("projection"));
    model.hyper.temperature = doc.at("hyper").at("temperature").get<double>();
    model.hyper.weight_decay = doc.at("hyper").at("weight_decay").get<double>();
    model.hyper.momentum = doc.at("hyper").at("momentum").get<double>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.velocity = zero_grads_like(model);
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
}

DiscreteJointSpec joint_spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad spec JSON: ") + e.what());
  }
  try {
    DiscreteJointSpec spec;
    auto pz = doc.at("pz").get<std::vector<double>>();
    spec.pz = Eigen::Map<const Vector>(pz.data(), static_cast<Eigen::Index>(pz.size()));
    auto load_matrix = [&](const char* key) {
      auto rows = doc.at(key).get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw DataError("empty matrix in spec");
      Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw DataError("ragged matrix in spec");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      return m;
    };
    spec.px_given_z = load_matrix("px_given_z");
    spec.py_given_z = load_matrix("py_given_z");
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad spec JSON: ") + e.what());
  }
}

std::string bound_report_to_json(const BoundReport& report) {
  constexpr double kLn2 = 0.6931471805599453;
  json doc;
  doc["clinfonce_estimate_nats"] = report.clinfonce_estimate.mean;
  doc["clinfonce_estimate_stderr_nats"] = report.clinfonce_estimate.stderr_of_mean;
  doc["clinfonce_estimate_batches"] = report.clinfonce_estimate.batches;
  doc["kl_exact_nats"] = report.kl_exact;
  doc["kl_exact_bits"] = report.kl_exact / kLn2;
  doc["mi_zx_nats"] = report.info.mi_zx;
  doc["mi_zy_nats"] = report.info.mi_zy;
  doc["h_z_nats"] = report.info.h_z;
  doc["h_z_bits"] = report.info.h_z / kLn2;
  doc["h_z_given_x_nats"] = report.info.h_z_given_x;
  doc["h_z_given_y_nats"] = report.info.h_z_given_y;
  doc["estimate_le_kl"] = report.estimate_le_kl;
  doc["kl_le_min_mi"] = report.kl_le_min_mi;
  doc["min_mi_le_h_z"] = report.min_mi_le_h_z;
  doc["equality_case"] = report.equality_case;
  doc["equality_holds"] = report.equality_holds;
  doc["all_ok"] = report.all_ok;
  doc["broken_link"] = report.broken_link;
  return doc.dump(2) + "\n";
}

std::string manifest_to_json(const RunManifest& manifest) {
  json doc;
  doc["command"] = manifest.command;
  doc["config"] = json::parse(manifest.config_json);
  doc["seed"] = manifest.seed;
  doc["version"] = kToolkitVersion;
  doc["input_hashes"] = manifest.input_hashes;
  doc["duration_seconds"] = manifest.duration_seconds;
  return doc.dump(2) + "\n";
}

void check_manifest_inputs(const std::string& manifest_json) {
  json doc;
  try {
    doc = json::parse(manifest_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad manifest JSON: ") + e.what());
  }
  for (const auto& [path, expected] : doc.at("input_hashes").items()) {
    std::string actual = hash_file(path);
    if (actual != expected.get<std::string>())
      throw DataError("input hash mismatch for " + path);
  }
}

}  // namespace clinfonce
