#include "zsl/vpb.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace zsl::vpb {

namespace {

// Sub-stream ids for the training loop's draw sequences.
constexpr std::uint64_t kStreamNetInit = 10;
constexpr std::uint64_t kStreamShuffle = 11;

std::unordered_map<int, int> seen_row_map(const Dataset& ds) {
  std::unordered_map<int, int> map;
  for (std::size_t i = 0; i < ds.seen_classes.size(); ++i) {
    map[ds.seen_classes[i]] = static_cast<int>(i);
  }
  return map;
}

Matrix seen_attribute_rows(const Dataset& ds) {
  Matrix out(static_cast<int>(ds.seen_classes.size()), ds.k);
  for (std::size_t i = 0; i < ds.seen_classes.size(); ++i) {
    for (int j = 0; j < ds.k; ++j) {
      out(static_cast<int>(i), j) = ds.attributes(ds.seen_classes[i], j);
    }
  }
  return out;
}

}  // namespace

void VpbConfig::validate() const {
  if (!(lr_proto > 0.0) || !(lr_embed > 0.0)) {
    throw ValidationError("vpb config: learning rates must be > 0");
  }
  if (batch_size < 1 || hidden < 1 || proto_iters_per_round < 1 ||
      embed_iters_per_round < 1 || rounds < 1) {
    throw ValidationError("vpb config: counts must be >= 1");
  }
  if (lambda_emb < 0.0) {
    throw ValidationError("vpb config: lambda_emb must be >= 0");
  }
}

PrototypeBank init_prototypes(const Dataset& ds) {
  auto rows = seen_row_map(ds);
  int p = static_cast<int>(ds.seen_classes.size());
  Matrix protos(p, ds.d);
  std::vector<int> counts(p, 0);
  for (int i : ds.train_indices) {
    int r = rows.at(ds.labels[i]);
    ++counts[r];
    for (int j = 0; j < ds.d; ++j) protos(r, j) += ds.features(i, j);
  }
  for (int r = 0; r < p; ++r) {
    if (counts[r] == 0) {
      throw ValidationError("seen class " + std::to_string(ds.seen_classes[r]) +
                            " has no training instances");
    }
    for (int j = 0; j < ds.d; ++j) protos(r, j) /= counts[r];
  }
  return PrototypeBank{std::move(protos)};
}

std::pair<double, Matrix> proto_loss_grad(const PrototypeBank& bank,
                                          const Matrix& batch_features,
                                          const std::vector<int>& batch_labels) {
  int p = bank.protos.rows;
  int d = bank.protos.cols;
  if (batch_features.cols != d) {
    throw ValidationError("proto_loss_grad: feature dimension " +
                          std::to_string(batch_features.cols) +
                          " != prototype dimension " + std::to_string(d));
  }
  if (static_cast<int>(batch_labels.size()) != batch_features.rows) {
    throw ValidationError("proto_loss_grad: batch size mismatch");
  }
  double loss = 0.0;
  Matrix grad(p, d);
  Matrix logits(1, p);
  for (int b = 0; b < batch_features.rows; ++b) {
    int label = batch_labels[b];
    if (label < 0 || label >= p) {
      throw ValidationError("proto_loss_grad: label " + std::to_string(label) +
                            " outside the seen set of size " +
                            std::to_string(p));
    }
    for (int j = 0; j < p; ++j) {
      double acc = 0.0;
      for (int t = 0; t < d; ++t) acc += batch_features(b, t) * bank.protos(j, t);
      logits.data[j] = acc;
    }
    Matrix probs = softmax_row(logits);
    double p_label = probs.data[label];
    if (p_label < std::numeric_limits<double>::min()) {
      p_label = std::numeric_limits<double>::min();
    }
    loss -= std::log(p_label);
    for (int j = 0; j < p; ++j) {
      double coef = probs.data[j] - (j == label ? 1.0 : 0.0);
      for (int t = 0; t < d; ++t) grad(j, t) += coef * batch_features(b, t);
    }
  }
  return {loss, std::move(grad)};
}

EmbedEval embed_loss_grad(const TwoLayerNet& net, const Matrix& seen_attributes,
                          const PrototypeBank& bank, double lambda_emb) {
  if (seen_attributes.rows != bank.protos.rows) {
    throw ValidationError("embed_loss_grad: attribute/prototype row mismatch");
  }
  if (net.in_dim() != seen_attributes.cols || net.out_dim() != bank.protos.cols) {
    throw ValidationError("embed_loss_grad: net dims do not match data");
  }
  EmbedEval eval;
  eval.grads = zero_grads(net);
  Matrix dout(1, net.out_dim());
  for (int i = 0; i < seen_attributes.rows; ++i) {
    Matrix y = row(seen_attributes, i);
    ForwardCache cache = forward_cached(net, y);
    for (int j = 0; j < net.out_dim(); ++j) {
      double r = cache.out.data[j] - bank.protos(i, j);
      eval.data_loss += r * r;
      dout.data[j] = 2.0 * r;
    }
    backward_into(net, y, cache, dout, eval.grads);
    append_kinks(cache, eval.kinks);
  }
  eval.objective = eval.data_loss +
                   lambda_emb * (frobenius_sq(net.w1) + frobenius_sq(net.w2));
  return eval;
}

void TrainLog::save_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "iteration,phase,loss\n";
  char buf[64];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    os << r.iteration << "," << r.phase << "," << buf << "\n";
  }
  if (!os) throw IoError("write failed for " + path);
}

TrainResult train(const Dataset& ds, const VpbConfig& cfg) {
  cfg.validate();
  ds.validate();

  TrainResult result;
  result.bank = init_prototypes(ds);
  Rng init_rng = Rng::substream(cfg.seed, kStreamNetInit);
  result.net = init_net(init_rng, ds.k, cfg.hidden, ds.d, InitMode::xavier);

  auto rows = seen_row_map(ds);
  Matrix seen_attrs = seen_attribute_rows(ds);

  Rng shuffle_rng = Rng::substream(cfg.seed, kStreamShuffle);
  std::vector<int> order = ds.train_indices;
  std::size_t cursor = order.size();  // force a shuffle before the first batch

  long long iteration = 0;
  for (int round = 0; round < cfg.rounds; ++round) {
    if (cfg.proto_mode == ProtoMode::learned) {
      for (int it = 0; it < cfg.proto_iters_per_round; ++it) {
        if (cursor + cfg.batch_size > order.size()) {
          shuffle(order, shuffle_rng);
          cursor = 0;
        }
        int bsz = std::min<std::size_t>(cfg.batch_size, order.size());
        Matrix batch(bsz, ds.d);
        std::vector<int> batch_labels(bsz);
        for (int b = 0; b < bsz; ++b) {
          int inst = order[cursor + b];
          batch_labels[b] = rows.at(ds.labels[inst]);
          for (int j = 0; j < ds.d; ++j) batch(b, j) = ds.features(inst, j);
        }
        cursor += bsz;
        auto [loss, grad] = proto_loss_grad(result.bank, batch, batch_labels);
        for (std::size_t i = 0; i < result.bank.protos.data.size(); ++i) {
          result.bank.protos.data[i] -= cfg.lr_proto * grad.data[i];
        }
        result.log.rows.push_back({iteration++, "proto", loss});
      }
    }
    for (int it = 0; it < cfg.embed_iters_per_round; ++it) {
      EmbedEval eval =
          embed_loss_grad(result.net, seen_attrs, result.bank, cfg.lambda_emb);
      sgd_step(result.net, eval.grads, cfg.lr_embed, cfg.lambda_emb);
      result.log.rows.push_back({iteration++, "embed", eval.objective});
    }
  }
  return result;
}

int recognize(const TwoLayerNet& net, const Matrix& attributes,
              const std::vector<int>& candidate_classes, const Matrix& x) {
  if (candidate_classes.empty()) {
    throw ValidationError("recognize: empty candidate list");
  }
  int best_class = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c : candidate_classes) {
    Matrix embedded = forward(net, row(attributes, c));
    double dist = sqdist(x, embedded);
    if (dist < best_dist || (dist == best_dist && c < best_class)) {
      best_dist = dist;
      best_class = c;
    }
  }
  return best_class;
}

double inner_product_accuracy(const PrototypeBank& bank, const Dataset& ds,
                              const std::vector<int>& instance_indices) {
  if (instance_indices.empty()) {
    throw ValidationError("inner_product_accuracy: no instances");
  }
  auto rows = seen_row_map(ds);
  int correct = 0;
  for (int inst : instance_indices) {
    int best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < bank.protos.rows; ++r) {
      double sim = 0.0;
      for (int j = 0; j < ds.d; ++j) {
        sim += ds.features(inst, j) * bank.protos(r, j);
      }
      if (sim > best_sim) {
        best_sim = sim;
        best = r;
      }
    }
    if (best == rows.at(ds.labels[inst])) ++correct;
  }
  return static_cast<double>(correct) / instance_indices.size();
}

}  // namespace zsl::vpb
