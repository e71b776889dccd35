#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "clinfonce/io.hpp"
#include "clinfonce/rng.hpp"

using namespace clinfonce;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("clinfonce_io_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("dataset CSV round trip is exact") {
  SyntheticDataset dataset = gen_synthetic_dataset(3, 4, 5, 3, 0.1, 0.7, 5);
  std::string csv = dataset_to_csv(dataset);
  SyntheticDataset loaded = dataset_from_csv(csv);
  CHECK(loaded.sample_ids == dataset.sample_ids);
  CHECK(loaded.labels == dataset.labels);
  CHECK((loaded.features - dataset.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.attributes == dataset.attributes);
  CHECK(dataset_to_csv(loaded) == csv);
}

TEST_CASE("attribute table reads from a merged dataset CSV") {
  SyntheticDataset dataset = gen_synthetic_dataset(3, 4, 5, 4, 0.0, 0.7, 2);
  AttributeTable table = attribute_table_from_csv(dataset_to_csv(dataset));
  CHECK(table.n() == dataset.n());
  CHECK(table.m() == 4);
  CHECK(table.attribute_names ==
        std::vector<std::string>{"attr_0", "attr_1", "attr_2", "attr_3"});
  CHECK(table.attributes == dataset.attributes);
  REQUIRE(table.labels.has_value());
  CHECK(*table.labels == dataset.labels);
}

TEST_CASE("attribute table compacts sparse label values") {
  std::string csv =
      "sample_id,label,wings,legs\n"
      "a,10,1,0\n"
      "b,-3,0,1\n"
      "c,10,1,1\n";
  AttributeTable table = attribute_table_from_csv(csv);
  REQUIRE(table.labels.has_value());
  CHECK(*table.labels == std::vector<int>{1, 0, 1});
  CHECK(table.class_values == std::vector<long long>{-3, 10});
  CHECK(table.num_classes == 2);
}

TEST_CASE("attribute cells must be binary") {
  std::string csv = "sample_id,label,wings\na,0,2\n";
  CHECK_THROWS_AS(attribute_table_from_csv(csv), DataError);
}

TEST_CASE("cluster CSV round trip compacts ids") {
  std::string csv =
      "sample_id,cluster_id\n"
      "a,7\n"
      "b,7\n"
      "c,3\n";
  auto [ids, clusters] = clusters_from_csv(csv);
  CHECK(ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(clusters.assignments == std::vector<int>{0, 0, 1});
  CHECK(clusters.num_clusters == 2);
  std::string out = clusters_to_csv(ids, clusters);
  auto [ids2, clusters2] = clusters_from_csv(out);
  CHECK(clusters2.assignments == clusters.assignments);
}

TEST_CASE("model JSON round trip preserves weights bit for bit") {
  EncoderModel model = make_encoder_model(6, Hyper{0.07, 1e-4, 0.95}, 9);
  std::string text = model_to_json(model);
  CHECK(text.find(kModelMagic) != std::string::npos);
  EncoderModel loaded = model_from_json(text);
  REQUIRE(loaded.encoder.size() == model.encoder.size());
  for (std::size_t l = 0; l < model.encoder.size(); ++l) {
    CHECK((loaded.encoder[l].weight - model.encoder[l].weight).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.encoder[l].bias - model.encoder[l].bias).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.encoder[l].act == model.encoder[l].act);
  }
  CHECK(loaded.hyper.temperature == model.hyper.temperature);
  CHECK(loaded.seed == model.seed);
  CHECK(model_to_json(loaded) == text);
}

TEST_CASE("model JSON rejects a bad magic string") {
  EncoderModel model = make_encoder_model(4, Hyper{}, 0);
  std::string text = model_to_json(model);
  auto pos = text.find(kModelMagic);
  text.replace(pos, 6, "BOGUS!");
  CHECK_THROWS_AS(model_from_json(text), DataError);
}

TEST_CASE("hierarchy JSON accepts single and multi parent nodes") {
  std::string text = R"({
    "root": 0,
    "nodes": [
      {"id": 0, "parent": null, "name": "root"},
      {"id": 1, "parent": 0, "name": "animal"},
      {"id": 2, "parent": 0, "name": "artifact"},
      {"id": 3, "parent": [1, 2], "name": "leaf"}
    ],
    "class_to_leaf": {"5": 3}
  })";
  HierarchyTree tree = hierarchy_from_json(text);
  for (const auto& node : tree.nodes)
    if (node.id == 3) CHECK(*node.parent == 1);
  CHECK(tree.class_to_leaf.at(5) == 3);
}

TEST_CASE("joint spec JSON parses and validates") {
  std::string good = R"({"pz":[0.5,0.5],"px_given_z":[[1,0],[0,1]],"py_given_z":[[1,0],[0,1]]})";
  DiscreteJointSpec spec = joint_spec_from_json(good);
  CHECK(spec.pz.size() == 2);
  std::string bad = R"({"pz":[0.9,0.5],"px_given_z":[[1,0],[0,1]],"py_given_z":[[1,0],[0,1]]})";
  CHECK_THROWS_AS(joint_spec_from_json(bad), DataError);
}

TEST_CASE("atomic writes respect the force flag") {
  TempDir dir;
  std::string path = dir.file("out.txt");
  atomic_write_file(path, "first", false);
  CHECK(read_file(path) == "first");
  CHECK_THROWS_AS(atomic_write_file(path, "second", false), DataError);
  CHECK(read_file(path) == "first");
  atomic_write_file(path, "second", true);
  CHECK(read_file(path) == "second");
}

TEST_CASE("manifest hash checking flags tampered inputs") {
  TempDir dir;
  std::string input = dir.file("input.csv");
  atomic_write_file(input, "sample_id,label\na,0\n", false);

  RunManifest manifest;
  manifest.command = "metrics";
  manifest.config_json = "{}";
  manifest.seed = 0;
  manifest.input_hashes[input] = hash_file(input);
  std::string text = manifest_to_json(manifest);
  check_manifest_inputs(text);

  atomic_write_file(input, "sample_id,label\na,1\n", true);
  CHECK_THROWS_AS(check_manifest_inputs(text), DataError);
}

TEST_CASE("loss trace and interpolation CSV layouts") {
  CHECK(loss_trace_to_csv({0.5, -0.25}) == "epoch,mean_loss\n1,0.5\n2,-0.25\n");
  InterpolationRow row;
  row.config_id = "labels";
  row.num_clusters = 4;
  row.mi_bits = 2.0;
  row.cond_entropy_bits = 0.0;
  row.mi_norm = 1.0;
  row.cond_entropy_norm = 0.0;
  row.top1 = 0.9875;
  CHECK(interpolation_to_csv({row}) ==
        "config_id,num_clusters,I_ZT_bits,H_ZgT_bits,I_norm,H_norm,top1_acc\n"
        "labels,4,2,0,1,0,0.9875\n");
}

TEST_CASE("format_double round trips exactly") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(12) - 6);
    CHECK(std::stod(format_double(v)) == v);
  }
}
