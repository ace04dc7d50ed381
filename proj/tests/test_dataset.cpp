#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "zsl/dataset.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

// Brute-force nearest-centroid classifier over the unseen test split,
// independent of any library classifier.
double nearest_centroid_unseen_accuracy(const Dataset& ds) {
  std::vector<std::vector<double>> centroid(ds.num_classes(),
                                            std::vector<double>(ds.d, 0.0));
  std::vector<int> count(ds.num_classes(), 0);
  for (int i : ds.test_unseen_indices) {
    ++count[ds.labels[i]];
    for (int j = 0; j < ds.d; ++j) centroid[ds.labels[i]][j] += ds.features(i, j);
  }
  for (int c : ds.unseen_classes) {
    for (int j = 0; j < ds.d; ++j) centroid[c][j] /= count[c];
  }
  int correct = 0;
  for (int i : ds.test_unseen_indices) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c : ds.unseen_classes) {
      double d = 0.0;
      for (int j = 0; j < ds.d; ++j) {
        double diff = ds.features(i, j) - centroid[c][j];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / ds.test_unseen_indices.size();
}

}  // namespace

TEST_CASE("synth is deterministic") {
  SynthConfig cfg;
  Dataset a = synth(cfg);
  Dataset b = synth(cfg);
  CHECK(a.features == b.features);
  CHECK(a.attributes == b.attributes);
  CHECK(a.labels == b.labels);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_seen_indices == b.test_seen_indices);
  CHECK(a.test_unseen_indices == b.test_unseen_indices);
}

TEST_CASE("synth with zero noise collapses each class to one point") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.p = 3;
  cfg.q = 1;
  cfg.n_per_class = 5;
  Dataset ds = synth(cfg);
  for (int c = 0; c < ds.num_classes(); ++c) {
    Matrix first = row(ds.features, c * cfg.n_per_class);
    for (int inst = 1; inst < cfg.n_per_class; ++inst) {
      Matrix other = row(ds.features, c * cfg.n_per_class + inst);
      CHECK(first == other);
      CHECK(sqdist(first, other) == 0.0);
    }
  }
  for (double v : ds.features.data) CHECK(v >= 0.0);
}

TEST_CASE("synth splits follow the holdout fraction") {
  SynthConfig cfg;  // p=8 q=2 n=50 frac=0.2
  Dataset ds = synth(cfg);
  CHECK(ds.train_indices.size() == 8u * 40u);
  CHECK(ds.test_seen_indices.size() == 8u * 10u);
  CHECK(ds.test_unseen_indices.size() == 2u * 50u);
}

TEST_CASE("synth rejects bad parameters") {
  SynthConfig cfg;
  cfg.q = 0;
  CHECK_THROWS_AS(synth(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.p = 1;
  CHECK_THROWS_AS(synth(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.test_seen_frac = 1.0;
  CHECK_THROWS_AS(synth(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.n_per_class = 3;
  CHECK_THROWS_AS(synth(cfg), ValidationError);
}

TEST_CASE("nearest-centroid oracle separates the reference dataset") {
  SynthConfig cfg;  // seed 42, p 8, q 2, d 32, k 16, n 50, sigma 0.05
  Dataset ds = synth(cfg);
  double acc = nearest_centroid_unseen_accuracy(ds);
  CHECK(acc >= 0.99);
  CHECK(acc == doctest::Approx(1.0));  // reference run, frozen
}

TEST_CASE("save then load round trips bit exactly") {
  fs::path dir = temp_dir("zsl_test_dataset_rt");
  SynthConfig cfg;
  cfg.p = 3;
  cfg.q = 2;
  cfg.d = 6;
  cfg.k = 4;
  cfg.n_per_class = 6;
  Dataset ds = synth(cfg);
  std::string manifest = save_dataset(ds, dir.string());
  Dataset loaded = load_dataset(manifest);
  CHECK(loaded.name == ds.name);
  CHECK(loaded.features == ds.features);
  CHECK(loaded.attributes == ds.attributes);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.seen_classes == ds.seen_classes);
  CHECK(loaded.unseen_classes == ds.unseen_classes);
  CHECK(loaded.train_indices == ds.train_indices);
  CHECK(loaded.test_unseen_indices == ds.test_unseen_indices);
  CHECK(loaded.test_seen_indices == ds.test_seen_indices);
  CHECK(loaded.class_names == ds.class_names);
  fs::remove_all(dir);
}

TEST_CASE("save emits identical bytes for the same dataset") {
  fs::path dir1 = temp_dir("zsl_test_dataset_b1");
  fs::path dir2 = temp_dir("zsl_test_dataset_b2");
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  save_dataset(ds, dir1.string());
  save_dataset(ds, dir2.string());
  for (const char* f : {"dataset.json", "features.zslf", "attributes.zslf",
                        "labels.zsli", "train_idx.zsli", "test_unseen_idx.zsli",
                        "test_seen_idx.zsli"}) {
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("validation rejects overlapping seen and unseen classes") {
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  ds.unseen_classes = {1};  // class 1 is already seen
  CHECK_THROWS_WITH_AS(ds.validate(), doctest::Contains("overlap"),
                       ValidationError);
}

TEST_CASE("validation rejects feature/label count mismatch") {
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  ds.labels.pop_back();
  CHECK_THROWS_WITH_AS(ds.validate(), doctest::Contains("labels length"),
                       ValidationError);
}

TEST_CASE("empty unseen list is rejected before write") {
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  // Relabel the unseen class as seen so only the split lists are wrong.
  ds.seen_classes = {0, 1, 2};
  ds.unseen_classes = {};
  fs::path dir = temp_dir("zsl_test_dataset_nowrite");
  CHECK_THROWS_WITH_AS(save_dataset(ds, dir.string()),
                       doctest::Contains("unseen class list is empty"),
                       ValidationError);
  CHECK(!fs::exists(dir / "features.zslf"));
  fs::remove_all(dir);
}

TEST_CASE("corrupted magic bytes are rejected") {
  fs::path dir = temp_dir("zsl_test_dataset_magic");
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  std::string manifest = save_dataset(ds, dir.string());
  {
    std::fstream f(dir / "features.zslf",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOPE", 4);
  }
  CHECK_THROWS_WITH_AS(load_dataset(manifest), doctest::Contains("bad magic"),
                       ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("manifest with unknown key is rejected") {
  fs::path dir = temp_dir("zsl_test_dataset_unknown");
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  std::string manifest = save_dataset(synth(cfg), dir.string());
  std::string text = slurp(manifest);
  text.insert(text.find('{') + 1, "\n  \"extra\": 1,");
  {
    std::ofstream os(manifest, std::ios::binary);
    os << text;
  }
  CHECK_THROWS_WITH_AS(load_dataset(manifest),
                       doctest::Contains("unknown manifest key"),
                       ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("l2 normalization gives unit rows") {
  SynthConfig cfg;
  cfg.p = 2;
  cfg.q = 1;
  cfg.d = 4;
  cfg.k = 3;
  cfg.n_per_class = 4;
  Dataset ds = synth(cfg);
  l2_normalize_features(ds);
  for (int i = 0; i < ds.num_instances(); ++i) {
    double norm = 0.0;
    for (int j = 0; j < ds.d; ++j) norm += ds.features(i, j) * ds.features(i, j);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
  }
}
