#include "zsl/structopt.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

namespace zsl::structopt {

namespace {

// Sub-stream ids for the training loop's draw sequences.
constexpr std::uint64_t kStreamNetInit = 20;
constexpr std::uint64_t kStreamMining = 21;

std::unordered_map<int, int> seen_pos_map(const Dataset& ds) {
  std::unordered_map<int, int> map;
  for (std::size_t i = 0; i < ds.seen_classes.size(); ++i) {
    map[ds.seen_classes[i]] = static_cast<int>(i);
  }
  return map;
}

std::vector<std::vector<int>> train_instances_by_seen_class(const Dataset& ds) {
  auto pos = seen_pos_map(ds);
  std::vector<std::vector<int>> by_class(ds.seen_classes.size());
  for (int i : ds.train_indices) by_class[pos.at(ds.labels[i])].push_back(i);
  return by_class;
}

// Embeddings plus caches for every batch instance and every seen class.
struct BatchEmbeddings {
  std::vector<Matrix> x;                 // batch features as row vectors
  std::vector<ForwardCache> visual;      // per batch member
  std::vector<Matrix> y;                 // per seen-class position
  std::vector<ForwardCache> semantic;    // per seen-class position
  std::unordered_map<int, int> batch_pos;  // instance index -> batch position
};

BatchEmbeddings embed_batch(const EmbeddingNets& nets, const Dataset& ds,
                            const std::vector<int>& instance_indices) {
  BatchEmbeddings e;
  e.x.reserve(instance_indices.size());
  e.visual.reserve(instance_indices.size());
  for (std::size_t b = 0; b < instance_indices.size(); ++b) {
    int inst = instance_indices[b];
    e.batch_pos[inst] = static_cast<int>(b);
    e.x.push_back(row(ds.features, inst));
    e.visual.push_back(forward_cached(nets.visual, e.x.back()));
  }
  e.y.reserve(ds.seen_classes.size());
  e.semantic.reserve(ds.seen_classes.size());
  for (int c : ds.seen_classes) {
    e.y.push_back(row(ds.attributes, c));
    e.semantic.push_back(forward_cached(nets.semantic, e.y.back()));
  }
  return e;
}

void add_scaled(Matrix& acc, const Matrix& a, const Matrix& b, double s) {
  for (std::size_t i = 0; i < acc.data.size(); ++i) {
    acc.data[i] += s * (a.data[i] - b.data[i]);
  }
}

}  // namespace

void StructOptConfig::validate() const {
  if (batch_classes < 2) {
    throw ValidationError(
        "structopt config: batch_classes must be >= 2 (negatives come from "
        "other classes in the batch)");
  }
  if (batch_per_class < 2) {
    throw ValidationError(
        "structopt config: batch_per_class must be >= 2 (positives come from "
        "the same class in the batch)");
  }
  if (!(lr_semantic > 0.0) || !(lr_visual > 0.0)) {
    throw ValidationError("structopt config: learning rates must be > 0");
  }
  if (hidden_semantic < 1 || hidden_visual < 1 || embed_dim < 1) {
    throw ValidationError("structopt config: dims must be >= 1");
  }
  for (double a : {alpha1, alpha2, alpha3}) {
    if (a < 0.0 || a >= 1.0) {
      throw ValidationError("structopt config: alphas must lie in [0,1)");
    }
  }
  if (beta < 0.0 || lambda_struct < 0.0 || l2_semantic < 0.0 ||
      l2_visual < 0.0) {
    throw ValidationError("structopt config: weights must be >= 0");
  }
  if (iters < 1) throw ValidationError("structopt config: iters must be >= 1");
}

Batch mine_batch(Rng& rng, const Dataset& ds, const EmbeddingNets& nets,
                 const StructOptConfig& cfg) {
  cfg.validate();
  auto by_class = train_instances_by_seen_class(ds);
  int p = static_cast<int>(ds.seen_classes.size());
  if (p < 2) {
    throw ValidationError("mine_batch: need at least 2 seen classes");
  }
  if (cfg.batch_classes > p) {
    throw ValidationError("mine_batch: batch_classes " +
                          std::to_string(cfg.batch_classes) +
                          " exceeds seen class count " + std::to_string(p));
  }
  for (int r = 0; r < p; ++r) {
    if (static_cast<int>(by_class[r].size()) < cfg.batch_per_class) {
      throw ValidationError(
          "mine_batch: seen class " + std::to_string(ds.seen_classes[r]) +
          " has only " + std::to_string(by_class[r].size()) +
          " training instances, need " + std::to_string(cfg.batch_per_class));
    }
  }

  // Draw order: classes, then each class's instances, then positives.
  std::vector<int> class_rows(p);
  for (int r = 0; r < p; ++r) class_rows[r] = r;
  for (int i = 0; i < cfg.batch_classes; ++i) {
    std::size_t j = i + rng.bounded(static_cast<std::uint64_t>(p - i));
    std::swap(class_rows[i], class_rows[j]);
  }

  Batch batch;
  std::vector<int> member_class(cfg.batch_classes * cfg.batch_per_class);
  for (int ci = 0; ci < cfg.batch_classes; ++ci) {
    std::vector<int> pool = by_class[class_rows[ci]];
    for (int s = 0; s < cfg.batch_per_class; ++s) {
      std::size_t j = s + rng.bounded(pool.size() - s);
      std::swap(pool[s], pool[j]);
      member_class[batch.instance_indices.size()] = class_rows[ci];
      batch.instance_indices.push_back(pool[s]);
    }
  }

  BatchEmbeddings emb = embed_batch(nets, ds, batch.instance_indices);
  int bsz = static_cast<int>(batch.instance_indices.size());

  for (int a = 0; a < bsz; ++a) {
    Tuple t;
    t.anchor_idx = batch.instance_indices[a];

    // Positive: uniform over the same-class block, skipping the anchor.
    int block = a / cfg.batch_per_class;
    int within = a % cfg.batch_per_class;
    int pick = static_cast<int>(
        rng.bounded(static_cast<std::uint64_t>(cfg.batch_per_class - 1)));
    if (pick >= within) ++pick;
    t.pos_idx = batch.instance_indices[block * cfg.batch_per_class + pick];

    // Hardest in-batch visual negative under the current visual embedding.
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int b = 0; b < bsz; ++b) {
      if (member_class[b] == member_class[a]) continue;
      double dist = sqdist(emb.visual[a].out, emb.visual[b].out);
      if (dist < best_dist) {
        best_dist = dist;
        best = b;
      }
    }
    t.neg_idx = batch.instance_indices[best];

    t.neg_class = -1;
    if (cfg.variant == Variant::BRS) {
      // Hardest semantic negative, searched over all seen classes.
      int best_class = -1;
      double best_cdist = std::numeric_limits<double>::infinity();
      for (int r = 0; r < p; ++r) {
        if (r == member_class[a]) continue;
        double dist = sqdist(emb.visual[a].out, emb.semantic[r].out);
        if (dist < best_cdist ||
            (dist == best_cdist && ds.seen_classes[r] < best_class)) {
          best_cdist = dist;
          best_class = ds.seen_classes[r];
        }
      }
      t.neg_class = best_class;
    }
    batch.tuples.push_back(t);
  }
  return batch;
}

namespace {

struct Accumulators {
  std::vector<Matrix> dphi_rank, dphi_struct, dpsi_rank;

  Accumulators(int bsz, int p, int dim)
      : dphi_rank(bsz, Matrix(1, dim)),
        dphi_struct(bsz, Matrix(1, dim)),
        dpsi_rank(p, Matrix(1, dim)) {}
};

// Shared structure term (visual triplets with self-adaptive margin).
void add_structure_term(const BatchEmbeddings& emb, const Batch& batch,
                        double alpha3, LossGrads& out, Accumulators& acc) {
  for (const Tuple& t : batch.tuples) {
    int a = emb.batch_pos.at(t.anchor_idx);
    int p = emb.batch_pos.at(t.pos_idx);
    int n = emb.batch_pos.at(t.neg_idx);
    double d_pos = sqdist(emb.visual[a].out, emb.visual[p].out);
    double d_neg = sqdist(emb.visual[a].out, emb.visual[n].out);
    double arg = (1.0 + alpha3) * d_pos - (1.0 - alpha3) * d_neg;
    out.kinks.push_back(arg);
    if (arg > 0.0) {
      out.structure += arg;
      double cp = 2.0 * (1.0 + alpha3);
      double cn = 2.0 * (1.0 - alpha3);
      add_scaled(acc.dphi_struct[a], emb.visual[a].out, emb.visual[p].out, cp);
      add_scaled(acc.dphi_struct[a], emb.visual[a].out, emb.visual[n].out, -cn);
      add_scaled(acc.dphi_struct[p], emb.visual[a].out, emb.visual[p].out, -cp);
      add_scaled(acc.dphi_struct[n], emb.visual[a].out, emb.visual[n].out, cn);
    }
  }
}

LossGrads finish(const EmbeddingNets& nets, const Dataset& ds,
                 const BatchEmbeddings& emb, Accumulators& acc,
                 LossGrads&& out) {
  out.g_visual_rank = zero_grads(nets.visual);
  out.g_visual_struct = zero_grads(nets.visual);
  out.g_semantic_rank = zero_grads(nets.semantic);
  for (std::size_t b = 0; b < emb.x.size(); ++b) {
    backward_into(nets.visual, emb.x[b], emb.visual[b], acc.dphi_rank[b],
                  out.g_visual_rank);
    backward_into(nets.visual, emb.x[b], emb.visual[b], acc.dphi_struct[b],
                  out.g_visual_struct);
  }
  for (std::size_t r = 0; r < emb.y.size(); ++r) {
    backward_into(nets.semantic, emb.y[r], emb.semantic[r], acc.dpsi_rank[r],
                  out.g_semantic_rank);
  }
  for (const ForwardCache& c : emb.visual) append_kinks(c, out.kinks);
  for (const ForwardCache& c : emb.semantic) append_kinks(c, out.kinks);
  (void)ds;
  return std::move(out);
}

}  // namespace

LossGrads loss_srs(const EmbeddingNets& nets, const Dataset& ds,
                   const Batch& batch, const StructOptConfig& cfg) {
  auto class_pos = seen_pos_map(ds);
  BatchEmbeddings emb = embed_batch(nets, ds, batch.instance_indices);
  int bsz = static_cast<int>(batch.instance_indices.size());
  int p = static_cast<int>(ds.seen_classes.size());

  LossGrads out;
  Accumulators acc(bsz, p, nets.visual.out_dim());

  for (int b = 0; b < bsz; ++b) {
    int r = class_pos.at(ds.labels[batch.instance_indices[b]]);
    const Matrix& phi = emb.visual[b].out;
    const Matrix& psi = emb.semantic[r].out;
    out.ranking += sqdist(phi, psi);
    add_scaled(acc.dphi_rank[b], phi, psi, 2.0);
    add_scaled(acc.dpsi_rank[r], phi, psi, -2.0);
  }

  add_structure_term(emb, batch, cfg.alpha3, out, acc);
  return finish(nets, ds, emb, acc, std::move(out));
}

LossGrads loss_brs(const EmbeddingNets& nets, const Dataset& ds,
                   const Batch& batch, const StructOptConfig& cfg) {
  auto class_pos = seen_pos_map(ds);
  BatchEmbeddings emb = embed_batch(nets, ds, batch.instance_indices);
  int bsz = static_cast<int>(batch.instance_indices.size());
  int p = static_cast<int>(ds.seen_classes.size());

  LossGrads out;
  Accumulators acc(bsz, p, nets.visual.out_dim());

  for (int b = 0; b < bsz; ++b) {
    const Tuple& t = batch.tuples[b];
    if (t.neg_class < 0) {
      throw ValidationError("loss_brs: tuple lacks a semantic negative");
    }
    int r_pos = class_pos.at(ds.labels[t.anchor_idx]);
    int r_neg = class_pos.at(t.neg_class);
    const Matrix& phi_a = emb.visual[emb.batch_pos.at(t.anchor_idx)].out;
    const Matrix& psi_pos = emb.semantic[r_pos].out;
    const Matrix& psi_neg = emb.semantic[r_neg].out;

    // Direction 1: visual anchor against matched/negative semantics.
    double d_pos = sqdist(phi_a, psi_pos);
    double d_neg = sqdist(phi_a, psi_neg);
    double arg1 = (1.0 + cfg.alpha1) * d_pos - (1.0 - cfg.alpha1) * d_neg;
    out.kinks.push_back(arg1);
    if (arg1 > 0.0) {
      out.ranking += arg1;
      double cp = 2.0 * (1.0 + cfg.alpha1);
      double cn = 2.0 * (1.0 - cfg.alpha1);
      int a = emb.batch_pos.at(t.anchor_idx);
      add_scaled(acc.dphi_rank[a], phi_a, psi_pos, cp);
      add_scaled(acc.dphi_rank[a], phi_a, psi_neg, -cn);
      add_scaled(acc.dpsi_rank[r_pos], phi_a, psi_pos, -cp);
      add_scaled(acc.dpsi_rank[r_neg], phi_a, psi_neg, cn);
    }

    // Direction 2: semantic anchor against the tuple's visual pair.
    if (cfg.beta > 0.0) {
      int j = emb.batch_pos.at(t.pos_idx);
      int n = emb.batch_pos.at(t.neg_idx);
      const Matrix& phi_j = emb.visual[j].out;
      const Matrix& phi_n = emb.visual[n].out;
      double d_pos2 = sqdist(psi_pos, phi_j);
      double d_neg2 = sqdist(psi_pos, phi_n);
      double arg2 = (1.0 + cfg.alpha2) * d_pos2 - (1.0 - cfg.alpha2) * d_neg2;
      out.kinks.push_back(arg2);
      if (arg2 > 0.0) {
        out.ranking += cfg.beta * arg2;
        double cp = cfg.beta * 2.0 * (1.0 + cfg.alpha2);
        double cn = cfg.beta * 2.0 * (1.0 - cfg.alpha2);
        add_scaled(acc.dpsi_rank[r_pos], psi_pos, phi_j, cp);
        add_scaled(acc.dpsi_rank[r_pos], psi_pos, phi_n, -cn);
        add_scaled(acc.dphi_rank[j], psi_pos, phi_j, -cp);
        add_scaled(acc.dphi_rank[n], psi_pos, phi_n, cn);
      }
    }
  }

  add_structure_term(emb, batch, cfg.alpha3, out, acc);
  return finish(nets, ds, emb, acc, std::move(out));
}

void TrainLog::save_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "iteration,ranking_loss,struct_loss,total\n";
  char buf[200];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g", r.iteration,
                  r.ranking_loss, r.struct_loss, r.total);
    os << buf << "\n";
  }
  if (!os) throw IoError("write failed for " + path);
}

TrainResult train(const Dataset& ds, const StructOptConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (cfg.hidden_visual != ds.d || cfg.embed_dim != ds.d) {
    throw ValidationError(
        "structopt train: identity initialization requires hidden_visual = "
        "embed_dim = d (" +
        std::to_string(ds.d) + "), got hidden_visual=" +
        std::to_string(cfg.hidden_visual) + " embed_dim=" +
        std::to_string(cfg.embed_dim));
  }

  TrainResult result;
  Rng init_rng = Rng::substream(cfg.seed, kStreamNetInit);
  result.nets.visual = init_net(init_rng, ds.d, cfg.hidden_visual,
                                cfg.embed_dim, InitMode::rect_identity);
  result.nets.semantic = init_net(init_rng, ds.k, cfg.hidden_semantic,
                                  cfg.embed_dim, InitMode::xavier);

  Rng mine_rng = Rng::substream(cfg.seed, kStreamMining);
  for (long long iter = 0; iter < cfg.iters; ++iter) {
    Batch batch = mine_batch(mine_rng, ds, result.nets, cfg);
    LossGrads lg = cfg.variant == Variant::SRS
                       ? loss_srs(result.nets, ds, batch, cfg)
                       : loss_brs(result.nets, ds, batch, cfg);
    GradPair g_visual = lg.g_visual_rank;
    for (std::size_t i = 0; i < g_visual.g1.data.size(); ++i) {
      g_visual.g1.data[i] += cfg.lambda_struct * lg.g_visual_struct.g1.data[i];
    }
    for (std::size_t i = 0; i < g_visual.g2.data.size(); ++i) {
      g_visual.g2.data[i] += cfg.lambda_struct * lg.g_visual_struct.g2.data[i];
    }
    sgd_step(result.nets.visual, g_visual, cfg.lr_visual, cfg.l2_visual);
    sgd_step(result.nets.semantic, lg.g_semantic_rank, cfg.lr_semantic,
             cfg.l2_semantic);
    result.log.rows.push_back(
        {iter, lg.ranking, lg.structure, lg.total(cfg.lambda_struct)});
  }
  return result;
}

int recognize(const TwoLayerNet& visual_net, const TwoLayerNet& semantic_net,
              const Matrix& attributes, const std::vector<int>& candidates,
              const Matrix& x) {
  if (candidates.empty()) {
    throw ValidationError("recognize: empty candidate list");
  }
  Matrix phi = forward(visual_net, x);
  int best_class = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c : candidates) {
    Matrix psi = forward(semantic_net, row(attributes, c));
    double dist = sqdist(phi, psi);
    if (dist < best_dist || (dist == best_dist && c < best_class)) {
      best_dist = dist;
      best_class = c;
    }
  }
  return best_class;
}

double intra_inter_ratio(const TwoLayerNet& visual_net, const Dataset& ds,
                         const std::vector<int>& instance_indices) {
  std::vector<Matrix> embedded;
  embedded.reserve(instance_indices.size());
  for (int i : instance_indices) {
    embedded.push_back(forward(visual_net, row(ds.features, i)));
  }
  double intra_sum = 0.0, inter_sum = 0.0;
  long long intra_n = 0, inter_n = 0;
  for (std::size_t i = 0; i < embedded.size(); ++i) {
    for (std::size_t j = i + 1; j < embedded.size(); ++j) {
      double dist = std::sqrt(sqdist(embedded[i], embedded[j]));
      if (ds.labels[instance_indices[i]] == ds.labels[instance_indices[j]]) {
        intra_sum += dist;
        ++intra_n;
      } else {
        inter_sum += dist;
        ++inter_n;
      }
    }
  }
  if (intra_n == 0 || inter_n == 0) {
    throw ValidationError("intra_inter_ratio: need both same-class and "
                          "cross-class instance pairs");
  }
  return (intra_sum / intra_n) / (inter_sum / inter_n);
}

}  // namespace zsl::structopt
