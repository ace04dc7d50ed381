#include "zsl/gradcheck.hpp"

#include <algorithm>

#include "zsl/dataset.hpp"
#include "zsl/mlp.hpp"
#include "zsl/structopt.hpp"
#include "zsl/tensor.hpp"
#include "zsl/vpb.hpp"

namespace zsl::gradcheck {

namespace {

constexpr std::uint64_t kStreamProblem = 100;

Matrix random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng_uniform(rng, lo, hi);
  return m;
}

double check_proto_cross_entropy(Rng& rng, const GradCheckConfig& cfg) {
  const int p = 4, batch = 6;
  vpb::PrototypeBank bank{random_matrix(rng, p, cfg.d, -1.0, 1.0)};
  Matrix feats = random_matrix(rng, batch, cfg.d, -1.0, 1.0);
  std::vector<int> labels(batch);
  for (int& l : labels) l = static_cast<int>(rng.bounded(p));

  auto [loss, grad] = vpb::proto_loss_grad(bank, feats, labels);
  (void)loss;
  auto lossfn = [&](const Matrix& z) {
    return vpb::proto_loss_grad(vpb::PrototypeBank{z}, feats, labels).first;
  };
  return fd_check(lossfn, bank.protos, grad, cfg.eps);
}

double check_prototype_embedding(Rng& rng, const GradCheckConfig& cfg) {
  const int p = 4;
  const double lambda_emb = 0.01;
  vpb::PrototypeBank bank{random_matrix(rng, p, cfg.d, 0.0, 1.0)};
  Matrix attrs = random_matrix(rng, p, cfg.k, 0.0, 1.0);
  TwoLayerNet net = init_net(rng, cfg.k, cfg.hidden, cfg.d, InitMode::xavier);

  vpb::EmbedEval eval = vpb::embed_loss_grad(net, attrs, bank, lambda_emb);
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    const Matrix& params = which == 0 ? net.w1 : net.w2;
    const Matrix& data_grad = which == 0 ? eval.grads.g1 : eval.grads.g2;
    Matrix analytic = data_grad;
    for (std::size_t i = 0; i < analytic.data.size(); ++i) {
      analytic.data[i] += 2.0 * lambda_emb * params.data[i];
    }
    auto with_params = [&](const Matrix& m) {
      TwoLayerNet n = net;
      (which == 0 ? n.w1 : n.w2) = m;
      return n;
    };
    auto lossfn = [&](const Matrix& m) {
      return vpb::embed_loss_grad(with_params(m), attrs, bank, lambda_emb)
          .objective;
    };
    auto probe = [&](const Matrix& m) {
      return vpb::embed_loss_grad(with_params(m), attrs, bank, lambda_emb)
          .kinks;
    };
    worst = std::max(worst, fd_check(lossfn, params, analytic, cfg.eps, probe));
  }
  return worst;
}

// Shared scaffolding for the structure-optimization losses: a small synthetic
// dataset, xavier branches, and a mined batch.
struct RankingProblem {
  Dataset ds;
  structopt::EmbeddingNets nets;
  structopt::StructOptConfig cfg;
  structopt::Batch batch;
};

RankingProblem make_ranking_problem(Rng& rng, const GradCheckConfig& cfg,
                                    structopt::Variant variant,
                                    std::uint64_t seed) {
  RankingProblem prob;
  SynthConfig synth_cfg;
  synth_cfg.seed = seed;
  synth_cfg.p = 4;
  synth_cfg.q = 1;
  synth_cfg.d = cfg.d;
  synth_cfg.k = cfg.k;
  synth_cfg.n_per_class = 6;
  synth_cfg.noise_sigma = 0.3;
  synth_cfg.test_seen_frac = 0.0;
  prob.ds = synth(synth_cfg);

  prob.nets.visual =
      init_net(rng, cfg.d, cfg.hidden, cfg.embed_dim, InitMode::xavier);
  prob.nets.semantic =
      init_net(rng, cfg.k, cfg.hidden, cfg.embed_dim, InitMode::xavier);

  prob.cfg.variant = variant;
  prob.cfg.batch_classes = 3;
  prob.cfg.batch_per_class = 3;
  prob.cfg.hidden_semantic = cfg.hidden;
  prob.cfg.hidden_visual = cfg.hidden;
  prob.cfg.embed_dim = cfg.embed_dim;
  prob.cfg.alpha1 = 0.2;
  prob.cfg.alpha2 = 0.15;
  prob.cfg.alpha3 = 0.25;
  prob.cfg.beta = 0.7;

  prob.batch = structopt::mine_batch(rng, prob.ds, prob.nets, prob.cfg);
  return prob;
}

enum class Component { ranking, structure };

// Checks one component of one loss against all parameter matrices it can
// depend on. fault_scale perturbs the first analytic gradient.
double check_ranking_component(const RankingProblem& prob, Component comp,
                               double eps, double fault_scale) {
  auto evaluate = [&](const structopt::EmbeddingNets& nets) {
    return prob.cfg.variant == structopt::Variant::SRS
               ? structopt::loss_srs(nets, prob.ds, prob.batch, prob.cfg)
               : structopt::loss_brs(nets, prob.ds, prob.batch, prob.cfg);
  };
  structopt::LossGrads lg = evaluate(prob.nets);

  struct Slot {
    const Matrix* params;
    const Matrix* analytic;
    int which;  // 0..3: visual w1, visual w2, semantic w1, semantic w2
  };
  std::vector<Slot> slots;
  if (comp == Component::ranking) {
    slots = {{&prob.nets.visual.w1, &lg.g_visual_rank.g1, 0},
             {&prob.nets.visual.w2, &lg.g_visual_rank.g2, 1},
             {&prob.nets.semantic.w1, &lg.g_semantic_rank.g1, 2},
             {&prob.nets.semantic.w2, &lg.g_semantic_rank.g2, 3}};
  } else {
    // The structure term involves the visual branch only.
    slots = {{&prob.nets.visual.w1, &lg.g_visual_struct.g1, 0},
             {&prob.nets.visual.w2, &lg.g_visual_struct.g2, 1}};
  }

  double worst = 0.0;
  bool first = true;
  for (const Slot& slot : slots) {
    auto with_params = [&](const Matrix& m) {
      structopt::EmbeddingNets nets = prob.nets;
      switch (slot.which) {
        case 0: nets.visual.w1 = m; break;
        case 1: nets.visual.w2 = m; break;
        case 2: nets.semantic.w1 = m; break;
        default: nets.semantic.w2 = m; break;
      }
      return nets;
    };
    auto lossfn = [&](const Matrix& m) {
      structopt::LossGrads e = evaluate(with_params(m));
      return comp == Component::ranking ? e.ranking : e.structure;
    };
    auto probe = [&](const Matrix& m) { return evaluate(with_params(m)).kinks; };
    Matrix analytic = *slot.analytic;
    if (first && fault_scale != 1.0) {
      for (double& v : analytic.data) v *= fault_scale;
    }
    first = false;
    worst = std::max(worst, fd_check(lossfn, *slot.params, analytic, eps, probe));
  }
  return worst;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(const GradCheckConfig& cfg) {
  std::vector<GradCheckResult> results = {{"proto_cross_entropy", 0.0},
                                          {"prototype_embedding", 0.0},
                                          {"simple_ranking", 0.0},
                                          {"bidirectional_ranking", 0.0},
                                          {"structure_triplet", 0.0}};
  for (int s = 0; s < cfg.seeds; ++s) {
    Rng rng = Rng::substream(static_cast<std::uint64_t>(s), kStreamProblem);
    results[0].max_rel_err =
        std::max(results[0].max_rel_err, check_proto_cross_entropy(rng, cfg));
    results[1].max_rel_err =
        std::max(results[1].max_rel_err, check_prototype_embedding(rng, cfg));

    RankingProblem srs = make_ranking_problem(
        rng, cfg, structopt::Variant::SRS, static_cast<std::uint64_t>(s));
    results[2].max_rel_err =
        std::max(results[2].max_rel_err,
                 check_ranking_component(srs, Component::ranking, cfg.eps,
                                         cfg.inject_fault ? 2.0 : 1.0));
    results[4].max_rel_err = std::max(
        results[4].max_rel_err,
        check_ranking_component(srs, Component::structure, cfg.eps, 1.0));

    RankingProblem brs = make_ranking_problem(
        rng, cfg, structopt::Variant::BRS, static_cast<std::uint64_t>(s) + 1000);
    results[3].max_rel_err = std::max(
        results[3].max_rel_err,
        check_ranking_component(brs, Component::ranking, cfg.eps, 1.0));
  }
  return results;
}

}  // namespace zsl::gradcheck
