#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/mlp.hpp"
#include "zsl/tensor.hpp"

namespace zsl::structopt {

enum class Variant { SRS, BRS };

struct StructOptConfig {
  Variant variant = Variant::SRS;
  int batch_classes = 10;
  int batch_per_class = 10;
  double lr_semantic = 1e-5;
  double lr_visual = 1e-7;
  int hidden_semantic = 800;
  int hidden_visual = 2048;
  int embed_dim = 2048;
  double alpha1 = 0.2;
  double alpha2 = 0.2;
  double alpha3 = 0.2;
  double beta = 1.0;
  double lambda_struct = 1.0;
  double l2_semantic = 1e-4;
  double l2_visual = 1e-4;
  long long iters = 30000;
  std::uint64_t seed = 42;

  void validate() const;
};

// anchor/pos/neg are global instance indices; label(anchor) = label(pos),
// label(anchor) != label(neg). neg_class is the mined semantic negative for
// BRS tuples and -1 otherwise.
struct Tuple {
  int anchor_idx;
  int pos_idx;
  int neg_idx;
  int neg_class;
};

struct EmbeddingNets {
  TwoLayerNet visual;    // d -> hidden_visual -> embed_dim
  TwoLayerNet semantic;  // k -> hidden_semantic -> embed_dim
};

struct Batch {
  std::vector<int> instance_indices;
  std::vector<Tuple> tuples;  // one per batch member, in batch order
};

// Samples batch_classes distinct seen classes with batch_per_class training
// instances each. Per anchor: the positive is a random same-class batch
// member, the visual negative is the cross-class batch member nearest in the
// current visual embedding, and (BRS) the semantic negative is the nearest
// other seen class over all seen classes.
Batch mine_batch(Rng& rng, const Dataset& ds, const EmbeddingNets& nets,
                 const StructOptConfig& cfg);

// Ranking and structure terms are reported and differentiated separately so
// callers can weight the structure term and check gradients per component.
// The structure loss touches the visual branch only. L2 terms are applied by
// the SGD updater. kinks lists every pre-activation and hinge argument.
struct LossGrads {
  double ranking = 0.0;
  double structure = 0.0;
  GradPair g_visual_rank;
  GradPair g_visual_struct;
  GradPair g_semantic_rank;
  std::vector<double> kinks;

  double total(double lambda_struct) const {
    return ranking + lambda_struct * structure;
  }
};

// sum_batch ||phi(x) - psi(y_label)||^2 plus the visual-structure triplet
// term with self-adaptive margin m3 = alpha3*(d_pos + d_neg).
LossGrads loss_srs(const EmbeddingNets& nets, const Dataset& ds,
                   const Batch& batch, const StructOptConfig& cfg);

// Bi-directional ranking: per anchor a hinge against the mined semantic
// negative (margin m1), plus beta times the reverse-direction hinge over the
// tuple's positive/negative visuals (margin m2), plus the structure term.
LossGrads loss_brs(const EmbeddingNets& nets, const Dataset& ds,
                   const Batch& batch, const StructOptConfig& cfg);

struct TrainLog {
  struct Row {
    long long iteration;
    double ranking_loss;
    double struct_loss;
    double total;
  };
  std::vector<Row> rows;

  void save_csv(const std::string& path) const;
};

struct TrainResult {
  EmbeddingNets nets;
  TrainLog log;
};

// The visual branch starts as the rectangular identity (phi(x) = x for
// nonnegative features), which requires hidden_visual = embed_dim = d; the
// semantic branch starts xavier.
TrainResult train(const Dataset& ds, const StructOptConfig& cfg);

// argmin over candidates of ||phi(x) - psi(y)||^2; lowest-id tie-break.
int recognize(const TwoLayerNet& visual_net, const TwoLayerNet& semantic_net,
              const Matrix& attributes, const std::vector<int>& candidates,
              const Matrix& x);

// Mean same-class pairwise embedded distance divided by mean cross-class
// pairwise embedded distance over the given instances.
double intra_inter_ratio(const TwoLayerNet& visual_net, const Dataset& ds,
                         const std::vector<int>& instance_indices);

}  // namespace zsl::structopt
