#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/mlp.hpp"
#include "zsl/tensor.hpp"

namespace zsl::vpb {

// One learnable visual prototype per seen class; row i corresponds to
// Dataset::seen_classes[i].
struct PrototypeBank {
  Matrix protos;  // p x d
};

enum class ProtoMode { learned, centroid };

struct VpbConfig {
  int batch_size = 100;
  double lr_proto = 1e-5;
  double lr_embed = 1e-6;
  int hidden = 800;
  double lambda_emb = 1e-4;
  int proto_iters_per_round = 500;
  int embed_iters_per_round = 1000;
  int rounds = 20;
  std::uint64_t seed = 42;
  ProtoMode proto_mode = ProtoMode::learned;

  void validate() const;
};

// Per-seen-class mean of training features.
PrototypeBank init_prototypes(const Dataset& ds);

// Cross-entropy over inner-product similarities, summed over the batch.
// Labels are bank row indices (0..p-1). The gradient is with respect to the
// prototypes only; features are never updated.
std::pair<double, Matrix> proto_loss_grad(const PrototypeBank& bank,
                                          const Matrix& batch_features,
                                          const std::vector<int>& batch_labels);

// One full pass over the p (semantic vector, prototype) pairs:
// data_loss = sum_i ||forward(net, y_i) - z_i||^2. The returned objective
// adds lambda_emb*(||w1||^2 + ||w2||^2); grads exclude the regularizer,
// which the SGD updater applies.
struct EmbedEval {
  double data_loss = 0.0;
  double objective = 0.0;
  GradPair grads;
  std::vector<double> kinks;
};
EmbedEval embed_loss_grad(const TwoLayerNet& net, const Matrix& seen_attributes,
                          const PrototypeBank& bank, double lambda_emb);

struct TrainLog {
  struct Row {
    long long iteration;
    std::string phase;  // "proto" or "embed"
    double loss;
  };
  std::vector<Row> rows;

  void save_csv(const std::string& path) const;
};

struct TrainResult {
  PrototypeBank bank;
  TwoLayerNet net;
  TrainLog log;
};

// Alternates prototype learning and semantic-embedding training for
// cfg.rounds rounds. In centroid mode the prototype phase is skipped and the
// bank stays at the per-class means.
TrainResult train(const Dataset& ds, const VpbConfig& cfg);

// argmin over candidate classes j of ||x - forward(net, y_j)||^2; ties break
// toward the lowest class id.
int recognize(const TwoLayerNet& net, const Matrix& attributes,
              const std::vector<int>& candidate_classes, const Matrix& x);

// Fraction of the given instances whose inner-product argmax prototype
// matches their label; ties break toward the lowest bank row.
double inner_product_accuracy(const PrototypeBank& bank, const Dataset& ds,
                              const std::vector<int>& instance_indices);

}  // namespace zsl::vpb
