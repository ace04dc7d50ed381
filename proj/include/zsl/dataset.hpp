#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsl/tensor.hpp"

namespace zsl {

// A zero-shot learning dataset: instance features, per-class attribute
// vectors, the seen/unseen class split and the instance-level train/test
// split. Class ids are global (0..C-1); seen/unseen are ordered id lists.
struct Dataset {
  std::string name;
  int d = 0;  // visual dimension
  int k = 0;  // semantic dimension
  Matrix features;    // N x d
  Matrix attributes;  // C x k, row c = class c
  std::vector<int> labels;  // length N, class id per instance
  std::vector<std::string> class_names;  // length C
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  std::vector<int> train_indices;        // seen-class instances
  std::vector<int> test_unseen_indices;  // unseen-class instances
  std::vector<int> test_seen_indices;    // held-out seen-class instances

  int num_instances() const { return features.rows; }
  int num_classes() const { return attributes.rows; }

  // Throws ValidationError naming the first violated invariant.
  void validate() const;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  int p = 8;   // seen classes
  int q = 2;   // unseen classes
  int d = 32;  // visual dimension
  int k = 16;  // semantic dimension
  int n_per_class = 50;
  double noise_sigma = 0.05;
  double test_seen_frac = 0.2;
};

// Attributes uniform in [0,1); features = relu(A*y_c + gaussian noise) for a
// hidden linear map A with entries uniform in [-1,1] scaled by 1/sqrt(k).
// Feature and attribute values are rounded to f32 so that saving is lossless.
// Classes 0..p-1 are seen, p..p+q-1 unseen; the last ceil(frac*n) instances
// of each seen class form the GZSL seen test split.
Dataset synth(const SynthConfig& cfg);

// Reads the dataset.json manifest plus the binary files it references.
Dataset load_dataset(const std::string& manifest_path);

// Writes dataset.json plus "ZSLF"/"ZSLI" binaries into dir; byte
// deterministic for a given Dataset. Returns the manifest path.
std::string save_dataset(const Dataset& ds, const std::string& dir);

// Scales every feature row to unit L2 norm (zero rows left untouched).
void l2_normalize_features(Dataset& ds);

}  // namespace zsl
