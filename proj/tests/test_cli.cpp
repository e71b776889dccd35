#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "clinfonce/io.hpp"

// Exercises the installed binary's exit codes and surface behavior.
// CLINFONCE_BIN points at the built executable.

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* env = std::getenv("CLINFONCE_BIN");
  REQUIRE_MESSAGE(env != nullptr, "CLINFONCE_BIN must point at the clinfonce binary");
  return env;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("clinfonce_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

int run_capture(const std::string& args, const std::string& stdout_path) {
  std::string cmd = cli_path() + " " + args + " >" + stdout_path + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("unknown subcommands and flags exit 1") {
  CHECK(run("definitely-not-a-subcommand") == 1);
  CHECK(run("metrics --no-such-flag x") == 1);
  CHECK(run("") == 1);
}

TEST_CASE("help exits 0") {
  CHECK(run("--help") == 0);
}

TEST_CASE("metrics happy path prints one row and exits 0") {
  TempDir dir;
  std::string data = dir.file("d.csv");
  std::string z = dir.file("z.csv");
  REQUIRE(run("gen-data --classes 3 --dim 4 --per-class 10 --attrs 4 --seed 1 --out " + data) == 0);
  REQUIRE(run("cluster-attr --table " + data + " --top-k 2 --out " + z) == 0);

  std::string out = dir.file("metrics.txt");
  CHECK(run_capture("metrics --clusters " + z + " --labels " + data, out) == 0);
  std::string text = clinfonce::read_file(out);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(std::count(text.begin(), text.end(), ',') == 5);
}

TEST_CASE("outputs refuse to overwrite without --force") {
  TempDir dir;
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --classes 2 --dim 2 --per-class 3 --attrs 2 --seed 0 --out " + data) == 0);
  CHECK(run("gen-data --classes 2 --dim 2 --per-class 3 --attrs 2 --seed 0 --out " + data) == 1);
  CHECK(run("gen-data --classes 2 --dim 2 --per-class 3 --attrs 2 --seed 0 --force --out " + data) == 0);
}

TEST_CASE("manifests are written next to outputs and record input hashes") {
  TempDir dir;
  std::string data = dir.file("d.csv");
  std::string z = dir.file("z.csv");
  REQUIRE(run("gen-data --classes 2 --dim 3 --per-class 5 --attrs 3 --seed 2 --out " + data) == 0);
  REQUIRE(run("cluster-attr --table " + data + " --top-k 1 --out " + z) == 0);
  std::string manifest = clinfonce::read_file(z + ".manifest.json");
  clinfonce::check_manifest_inputs(manifest);
  CHECK(manifest.find("cluster-attr") != std::string::npos);

  // Tampering with the input breaks the recorded hash.
  std::ofstream(data, std::ios::app) << "tampered\n";
  CHECK_THROWS_AS(clinfonce::check_manifest_inputs(manifest), clinfonce::DataError);
}

TEST_CASE("malformed inputs exit 1") {
  TempDir dir;
  std::string bad = dir.file("bad.json");
  std::ofstream(bad) << "{\"pz\": [0.9, 0.5]}";
  CHECK(run("verify-bounds --spec " + bad) == 1);

  std::string bad_csv = dir.file("bad.csv");
  std::ofstream(bad_csv) << "wrong,header\n1,2\n";
  CHECK(run("cluster-attr --table " + bad_csv + " --top-k 1 --out " + dir.file("z.csv")) == 1);
}

TEST_CASE("verify-bounds succeeds on a valid spec") {
  TempDir dir;
  std::string spec = dir.file("spec.json");
  std::ofstream(spec) << R"({"pz":[0.5,0.5],"px_given_z":[[1,0],[0,1]],"py_given_z":[[1,0],[0,1]]})";
  std::string out = dir.file("report.json");
  CHECK(run_capture("verify-bounds --spec " + spec + " --n 16 --batches 200 --seed 4", out) == 0);
  std::string text = clinfonce::read_file(out);
  CHECK(text.find("\"all_ok\": true") != std::string::npos);
}

TEST_CASE("cluster-hier consumes tree JSON and label files") {
  TempDir dir;
  std::string tree = dir.file("tree.json");
  std::ofstream(tree) << R"({
    "root": 0,
    "nodes": [
      {"id": 0, "parent": null, "name": "root"},
      {"id": 1, "parent": 0, "name": "a"},
      {"id": 2, "parent": 0, "name": "b"},
      {"id": 3, "parent": 1, "name": "c1"},
      {"id": 4, "parent": 1, "name": "c2"},
      {"id": 5, "parent": 2, "name": "c3"}
    ],
    "class_to_leaf": {"0": 3, "1": 4, "2": 5}
  })";
  std::string labels = dir.file("labels.csv");
  std::ofstream(labels) << "sample_id,label\na,0\nb,1\nc,2\nd,0\n";
  std::string z = dir.file("z.csv");
  REQUIRE(run("cluster-hier --tree " + tree + " --level 2 --labels " + labels + " --out " + z) == 0);
  auto [ids, clusters] = clinfonce::clusters_from_csv(clinfonce::read_file(z));
  CHECK(clusters.assignments == std::vector<int>{0, 0, 1, 0});
  CHECK(clusters.num_clusters == 2);
}
