#include "zsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"

namespace fs = std::filesystem;

namespace zsl {

namespace {

constexpr char kMatrixMagic[4] = {'Z', 'S', 'L', 'F'};
constexpr char kIndexMagic[4] = {'Z', 'S', 'L', 'I'};
constexpr std::uint32_t kFormatVersion = 1;

// Sub-stream ids for synth's independent draw sequences.
constexpr std::uint64_t kStreamAttributes = 1;
constexpr std::uint64_t kStreamLinearMap = 2;
constexpr std::uint64_t kStreamNoise = 3;

void write_matrix_file(const fs::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binio::put_magic(os, kMatrixMagic);
  binio::put_u32(os, kFormatVersion);
  binio::put_u64(os, static_cast<std::uint64_t>(m.rows));
  binio::put_u64(os, static_cast<std::uint64_t>(m.cols));
  for (double v : m.data) binio::put_f32(os, static_cast<float>(v));
  if (!os) throw IoError("write failed for " + path.string());
}

Matrix read_matrix_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("missing file: " + path.string());
  binio::check_magic(is, kMatrixMagic, path.string());
  std::uint32_t version = binio::get_u32(is, path.string() + " version");
  if (version != kFormatVersion) {
    throw ValidationError("unsupported version " + std::to_string(version) +
                          " in " + path.string());
  }
  std::uint64_t rows = binio::get_u64(is, path.string() + " rows");
  std::uint64_t cols = binio::get_u64(is, path.string() + " cols");
  if (rows * cols > (1ull << 31)) {
    throw ValidationError("implausible matrix size in " + path.string());
  }
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (double& v : m.data) {
    v = static_cast<double>(binio::get_f32(is, path.string() + " data"));
  }
  return m;
}

void write_index_file(const fs::path& path, const std::vector<int>& idx) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binio::put_magic(os, kIndexMagic);
  binio::put_u32(os, kFormatVersion);
  binio::put_u64(os, static_cast<std::uint64_t>(idx.size()));
  for (int v : idx) binio::put_u32(os, static_cast<std::uint32_t>(v));
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<int> read_index_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("missing file: " + path.string());
  binio::check_magic(is, kIndexMagic, path.string());
  std::uint32_t version = binio::get_u32(is, path.string() + " version");
  if (version != kFormatVersion) {
    throw ValidationError("unsupported version " + std::to_string(version) +
                          " in " + path.string());
  }
  std::uint64_t n = binio::get_u64(is, path.string() + " count");
  if (n > (1ull << 31)) {
    throw ValidationError("implausible index count in " + path.string());
  }
  std::vector<int> idx(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    idx[i] = static_cast<int>(binio::get_u32(is, path.string() + " entry"));
  }
  return idx;
}

void check_index_list(const std::vector<int>& idx, int n,
                      const std::string& name) {
  std::set<int> seen;
  for (int i : idx) {
    if (i < 0 || i >= n) {
      throw ValidationError("invariant violated: " + name + " contains " +
                            std::to_string(i) + ", outside [0," +
                            std::to_string(n) + ")");
    }
    if (!seen.insert(i).second) {
      throw ValidationError("invariant violated: " + name +
                            " contains duplicate index " + std::to_string(i));
    }
  }
}

}  // namespace

void Dataset::validate() const {
  if (d < 1 || k < 1) {
    throw ValidationError("invariant violated: dimensions d and k must be >= 1");
  }
  if (features.cols != d) {
    throw ValidationError("invariant violated: features have " +
                          std::to_string(features.cols) + " columns, expected d=" +
                          std::to_string(d));
  }
  if (attributes.cols != k) {
    throw ValidationError("invariant violated: attributes have " +
                          std::to_string(attributes.cols) +
                          " columns, expected k=" + std::to_string(k));
  }
  int n = features.rows;
  int c = attributes.rows;
  if (static_cast<int>(labels.size()) != n) {
    throw ValidationError("invariant violated: features row count " +
                          std::to_string(n) + " != labels length " +
                          std::to_string(labels.size()));
  }
  if (static_cast<int>(class_names.size()) != c) {
    throw ValidationError("invariant violated: class_names length " +
                          std::to_string(class_names.size()) +
                          " != attribute rows " + std::to_string(c));
  }
  if (seen_classes.empty()) {
    throw ValidationError("invariant violated: seen class list is empty");
  }
  if (unseen_classes.empty()) {
    throw ValidationError("invariant violated: unseen class list is empty");
  }
  if (static_cast<int>(seen_classes.size() + unseen_classes.size()) != c) {
    throw ValidationError(
        "invariant violated: attributes row count " + std::to_string(c) +
        " != |seen| + |unseen| = " +
        std::to_string(seen_classes.size() + unseen_classes.size()));
  }
  std::set<int> seen_set, unseen_set;
  for (int id : seen_classes) {
    if (id < 0 || id >= c || !seen_set.insert(id).second) {
      throw ValidationError("invariant violated: bad or duplicate seen class " +
                            std::to_string(id));
    }
  }
  for (int id : unseen_classes) {
    if (id < 0 || id >= c || !unseen_set.insert(id).second) {
      throw ValidationError(
          "invariant violated: bad or duplicate unseen class " +
          std::to_string(id));
    }
    if (seen_set.count(id)) {
      throw ValidationError(
          "invariant violated: seen and unseen classes overlap at class " +
          std::to_string(id));
    }
  }
  for (int i = 0; i < n; ++i) {
    int l = labels[i];
    if (l < 0 || l >= c || (!seen_set.count(l) && !unseen_set.count(l))) {
      throw ValidationError("invariant violated: label " + std::to_string(l) +
                            " of instance " + std::to_string(i) +
                            " is not a known class");
    }
  }
  check_index_list(train_indices, n, "train_indices");
  check_index_list(test_unseen_indices, n, "test_unseen_indices");
  check_index_list(test_seen_indices, n, "test_seen_indices");
  for (int i : train_indices) {
    if (!seen_set.count(labels[i])) {
      throw ValidationError(
          "invariant violated: train instance " + std::to_string(i) +
          " has unseen-class label " + std::to_string(labels[i]));
    }
  }
  for (int i : test_unseen_indices) {
    if (!unseen_set.count(labels[i])) {
      throw ValidationError(
          "invariant violated: test_unseen instance " + std::to_string(i) +
          " has seen-class label " + std::to_string(labels[i]));
    }
  }
  for (int i : test_seen_indices) {
    if (!seen_set.count(labels[i])) {
      throw ValidationError(
          "invariant violated: test_seen instance " + std::to_string(i) +
          " has unseen-class label " + std::to_string(labels[i]));
    }
  }
  std::set<int> train_set(train_indices.begin(), train_indices.end());
  for (int i : test_seen_indices) {
    if (train_set.count(i)) {
      throw ValidationError(
          "invariant violated: instance " + std::to_string(i) +
          " appears in both train_indices and test_seen_indices");
    }
  }
  if (!features.all_finite()) {
    throw ValidationError("invariant violated: features contain non-finite values");
  }
  if (!attributes.all_finite()) {
    throw ValidationError(
        "invariant violated: attributes contain non-finite values");
  }
}

Dataset synth(const SynthConfig& cfg) {
  if (cfg.p < 2) throw ValidationError("synth: p must be >= 2");
  if (cfg.q < 1) throw ValidationError("synth: q must be >= 1");
  if (cfg.d < 1 || cfg.k < 1) throw ValidationError("synth: d and k must be >= 1");
  if (cfg.n_per_class < 4) {
    throw ValidationError("synth: n_per_class must be >= 4");
  }
  if (cfg.noise_sigma < 0.0) {
    throw ValidationError("synth: noise_sigma must be >= 0");
  }
  if (cfg.test_seen_frac < 0.0 || cfg.test_seen_frac >= 1.0) {
    throw ValidationError("synth: test_seen_frac must be in [0,1)");
  }
  int holdout =
      static_cast<int>(std::ceil(cfg.test_seen_frac * cfg.n_per_class));
  if (holdout >= cfg.n_per_class) {
    throw ValidationError(
        "synth: test_seen_frac leaves no training instances per class");
  }

  int num_classes = cfg.p + cfg.q;
  int n = num_classes * cfg.n_per_class;

  Dataset ds;
  ds.d = cfg.d;
  ds.k = cfg.k;
  {
    std::ostringstream name;
    name << "synth-s" << cfg.seed << "-p" << cfg.p << "-q" << cfg.q << "-d"
         << cfg.d << "-k" << cfg.k << "-n" << cfg.n_per_class;
    ds.name = name.str();
  }

  Rng attr_rng = Rng::substream(cfg.seed, kStreamAttributes);
  ds.attributes = Matrix(num_classes, cfg.k);
  for (double& v : ds.attributes.data) v = rng_uniform(attr_rng, 0.0, 1.0);

  Rng map_rng = Rng::substream(cfg.seed, kStreamLinearMap);
  Matrix lin(cfg.d, cfg.k);
  double scale = 1.0 / std::sqrt(static_cast<double>(cfg.k));
  for (double& v : lin.data) v = rng_uniform(map_rng, -1.0, 1.0) * scale;

  Rng noise_rng = Rng::substream(cfg.seed, kStreamNoise);
  ds.features = Matrix(n, cfg.d);
  ds.labels.resize(n);
  for (int c = 0; c < num_classes; ++c) {
    Matrix mean = matmul(lin, transpose(row(ds.attributes, c)));  // d x 1
    for (int inst = 0; inst < cfg.n_per_class; ++inst) {
      int r = c * cfg.n_per_class + inst;
      ds.labels[r] = c;
      for (int j = 0; j < cfg.d; ++j) {
        double v = mean.data[j] + cfg.noise_sigma * noise_rng.normal();
        ds.features(r, j) = v > 0.0 ? v : 0.0;
      }
    }
  }

  // Match on-disk f32 precision so save -> load is a bitwise identity.
  for (double& v : ds.features.data) v = static_cast<double>(static_cast<float>(v));
  for (double& v : ds.attributes.data) {
    v = static_cast<double>(static_cast<float>(v));
  }

  ds.class_names.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    ds.class_names[c] = "class_" + std::to_string(c);
  }
  for (int c = 0; c < cfg.p; ++c) ds.seen_classes.push_back(c);
  for (int c = cfg.p; c < num_classes; ++c) ds.unseen_classes.push_back(c);

  for (int c = 0; c < num_classes; ++c) {
    for (int inst = 0; inst < cfg.n_per_class; ++inst) {
      int r = c * cfg.n_per_class + inst;
      if (c >= cfg.p) {
        ds.test_unseen_indices.push_back(r);
      } else if (inst >= cfg.n_per_class - holdout) {
        ds.test_seen_indices.push_back(r);
      } else {
        ds.train_indices.push_back(r);
      }
    }
  }

  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw ValidationError("missing dataset manifest: " + manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest " + manifest_path + ": " +
                          e.what());
  }

  static const std::set<std::string> kTopKeys = {"name", "d", "k", "classes",
                                                 "files"};
  for (auto it = manifest.begin(); it != manifest.end(); ++it) {
    if (!kTopKeys.count(it.key())) {
      throw ValidationError("unknown manifest key \"" + it.key() + "\" in " +
                            manifest_path);
    }
  }
  for (const std::string& key : kTopKeys) {
    if (!manifest.contains(key)) {
      throw ValidationError("manifest missing key \"" + key + "\" in " +
                            manifest_path);
    }
  }

  Dataset ds;
  ds.name = manifest.at("name").get<std::string>();
  ds.d = manifest.at("d").get<int>();
  ds.k = manifest.at("k").get<int>();

  const auto& classes = manifest.at("classes");
  if (!classes.is_array() || classes.empty()) {
    throw ValidationError("manifest classes must be a non-empty array");
  }
  ds.class_names.resize(classes.size());
  for (const auto& entry : classes) {
    for (auto it = entry.begin(); it != entry.end(); ++it) {
      if (it.key() != "id" && it.key() != "name" && it.key() != "seen") {
        throw ValidationError("unknown class key \"" + it.key() + "\" in " +
                              manifest_path);
      }
    }
    int id = entry.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(classes.size())) {
      throw ValidationError("class id " + std::to_string(id) +
                            " out of range in manifest");
    }
    ds.class_names[id] = entry.at("name").get<std::string>();
    if (entry.at("seen").get<bool>()) {
      ds.seen_classes.push_back(id);
    } else {
      ds.unseen_classes.push_back(id);
    }
  }

  const auto& files = manifest.at("files");
  auto file_path = [&](const char* key) {
    if (!files.contains(key)) {
      throw ValidationError(std::string("manifest files missing \"") + key +
                            "\"");
    }
    return fs::path(manifest_path).parent_path() /
           files.at(key).get<std::string>();
  };

  ds.features = read_matrix_file(file_path("features"));
  ds.attributes = read_matrix_file(file_path("attributes"));
  ds.labels = read_index_file(file_path("labels"));
  ds.train_indices = read_index_file(file_path("train_idx"));
  ds.test_unseen_indices = read_index_file(file_path("test_unseen_idx"));
  ds.test_seen_indices = read_index_file(file_path("test_seen_idx"));

  ds.validate();
  return ds;
}

std::string save_dataset(const Dataset& ds, const std::string& dir) {
  ds.validate();
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  write_matrix_file(root / "features.zslf", ds.features);
  write_matrix_file(root / "attributes.zslf", ds.attributes);
  write_index_file(root / "labels.zsli", ds.labels);
  write_index_file(root / "train_idx.zsli", ds.train_indices);
  write_index_file(root / "test_unseen_idx.zsli", ds.test_unseen_indices);
  write_index_file(root / "test_seen_idx.zsli", ds.test_seen_indices);

  std::set<int> seen_set(ds.seen_classes.begin(), ds.seen_classes.end());
  nlohmann::ordered_json manifest;
  manifest["name"] = ds.name;
  manifest["d"] = ds.d;
  manifest["k"] = ds.k;
  manifest["classes"] = nlohmann::ordered_json::array();
  for (int c = 0; c < ds.num_classes(); ++c) {
    manifest["classes"].push_back({{"id", c},
                                   {"name", ds.class_names[c]},
                                   {"seen", seen_set.count(c) > 0}});
  }
  manifest["files"] = {{"features", "features.zslf"},
                       {"labels", "labels.zsli"},
                       {"attributes", "attributes.zslf"},
                       {"train_idx", "train_idx.zsli"},
                       {"test_unseen_idx", "test_unseen_idx.zsli"},
                       {"test_seen_idx", "test_seen_idx.zsli"}};

  fs::path manifest_path = root / "dataset.json";
  std::ofstream os(manifest_path, std::ios::binary);
  if (!os) throw IoError("cannot open " + manifest_path.string());
  os << manifest.dump(2) << "\n";
  if (!os) throw IoError("write failed for " + manifest_path.string());
  return manifest_path.string();
}

void l2_normalize_features(Dataset& ds) {
  for (int i = 0; i < ds.features.rows; ++i) {
    double norm_sq = 0.0;
    for (int j = 0; j < ds.features.cols; ++j) {
      norm_sq += ds.features(i, j) * ds.features(i, j);
    }
    if (norm_sq <= 0.0) continue;
    double inv = 1.0 / std::sqrt(norm_sq);
    for (int j = 0; j < ds.features.cols; ++j) ds.features(i, j) *= inv;
  }
}

}  // namespace zsl
