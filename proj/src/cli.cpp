#include "zsl/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsl/dataset.hpp"
#include "zsl/eval.hpp"
#include "zsl/gradcheck.hpp"
#include "zsl/mlp.hpp"
#include "zsl/structopt.hpp"
#include "zsl/vpb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace zsl::cli {

namespace {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string resolve_manifest(const std::string& data_path) {
  fs::path p(data_path);
  if (fs::is_directory(p)) p /= "dataset.json";
  if (!fs::exists(p)) {
    throw ValidationError("dataset not found at " + data_path);
  }
  return p.string();
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream is(path);
  if (!is) throw ValidationError(std::string("missing ") + what + ": " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("malformed " + std::string(what) + " " + path +
                          ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, const char* what) {
  if (!j.empty()) {
    throw ValidationError(std::string("unknown ") + what + " key \"" +
                          j.begin().key() + "\"");
  }
}

template <typename T>
void take(json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
    j.erase(key);
  }
}

// ---------------------------------------------------------------------------
// Method selection

enum class Method { vpb, vcb, srs, sr, brs, br };

Method parse_method(const std::string& name) {
  if (name == "vpb") return Method::vpb;
  if (name == "vcb") return Method::vcb;
  if (name == "srs") return Method::srs;
  if (name == "sr") return Method::sr;
  if (name == "brs") return Method::brs;
  if (name == "br") return Method::br;
  throw ValidationError("unknown method \"" + name +
                        "\" (expected vpb, vcb, srs, sr, brs or br)");
}

bool is_prototype_method(Method m) {
  return m == Method::vpb || m == Method::vcb;
}

// ---------------------------------------------------------------------------
// Config JSON <-> structs. Unknown keys are rejected.

vpb::VpbConfig vpb_config_from_json(json j) {
  vpb::VpbConfig cfg;
  take(j, "batch_size", cfg.batch_size);
  take(j, "lr_proto", cfg.lr_proto);
  take(j, "lr_embed", cfg.lr_embed);
  take(j, "hidden", cfg.hidden);
  take(j, "lambda_emb", cfg.lambda_emb);
  take(j, "proto_iters_per_round", cfg.proto_iters_per_round);
  take(j, "embed_iters_per_round", cfg.embed_iters_per_round);
  take(j, "rounds", cfg.rounds);
  take(j, "seed", cfg.seed);
  if (j.contains("proto_mode")) {
    std::string mode = j.at("proto_mode").get<std::string>();
    if (mode == "learned") {
      cfg.proto_mode = vpb::ProtoMode::learned;
    } else if (mode == "centroid") {
      cfg.proto_mode = vpb::ProtoMode::centroid;
    } else {
      throw ValidationError("proto_mode must be \"learned\" or \"centroid\"");
    }
    j.erase("proto_mode");
  }
  reject_unknown_keys(j, "config");
  return cfg;
}

ordered_json vpb_config_to_json(const vpb::VpbConfig& cfg) {
  ordered_json j;
  j["batch_size"] = cfg.batch_size;
  j["lr_proto"] = cfg.lr_proto;
  j["lr_embed"] = cfg.lr_embed;
  j["hidden"] = cfg.hidden;
  j["lambda_emb"] = cfg.lambda_emb;
  j["proto_iters_per_round"] = cfg.proto_iters_per_round;
  j["embed_iters_per_round"] = cfg.embed_iters_per_round;
  j["rounds"] = cfg.rounds;
  j["seed"] = cfg.seed;
  j["proto_mode"] =
      cfg.proto_mode == vpb::ProtoMode::learned ? "learned" : "centroid";
  return j;
}

structopt::StructOptConfig structopt_config_from_json(json j) {
  structopt::StructOptConfig cfg;
  take(j, "batch_classes", cfg.batch_classes);
  take(j, "batch_per_class", cfg.batch_per_class);
  take(j, "lr_semantic", cfg.lr_semantic);
  take(j, "lr_visual", cfg.lr_visual);
  take(j, "hidden_semantic", cfg.hidden_semantic);
  take(j, "hidden_visual", cfg.hidden_visual);
  take(j, "embed_dim", cfg.embed_dim);
  take(j, "alpha1", cfg.alpha1);
  take(j, "alpha2", cfg.alpha2);
  take(j, "alpha3", cfg.alpha3);
  take(j, "beta", cfg.beta);
  take(j, "lambda_struct", cfg.lambda_struct);
  take(j, "l2_semantic", cfg.l2_semantic);
  take(j, "l2_visual", cfg.l2_visual);
  take(j, "iters", cfg.iters);
  take(j, "seed", cfg.seed);
  reject_unknown_keys(j, "config");
  return cfg;
}

ordered_json structopt_config_to_json(const structopt::StructOptConfig& cfg) {
  ordered_json j;
  j["batch_classes"] = cfg.batch_classes;
  j["batch_per_class"] = cfg.batch_per_class;
  j["lr_semantic"] = cfg.lr_semantic;
  j["lr_visual"] = cfg.lr_visual;
  j["hidden_semantic"] = cfg.hidden_semantic;
  j["hidden_visual"] = cfg.hidden_visual;
  j["embed_dim"] = cfg.embed_dim;
  j["alpha1"] = cfg.alpha1;
  j["alpha2"] = cfg.alpha2;
  j["alpha3"] = cfg.alpha3;
  j["beta"] = cfg.beta;
  j["lambda_struct"] = cfg.lambda_struct;
  j["l2_semantic"] = cfg.l2_semantic;
  j["l2_visual"] = cfg.l2_visual;
  j["iters"] = cfg.iters;
  j["seed"] = cfg.seed;
  return j;
}

std::string config_digest(const std::string& method, bool l2_normalize,
                          const ordered_json& config) {
  json canonical;  // nlohmann::json orders keys, so the dump is canonical
  canonical["method"] = method;
  canonical["l2_normalize"] = l2_normalize;
  canonical["config"] = json::parse(config.dump());
  return hex64(fnv1a64(canonical.dump()));
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string method_name;
  std::string data;
  std::string out = "run";
  std::string config_path;
  bool l2_normalize = false;
};

// Checkpoint layout ("ZSLW" container):
//   prototype methods: net 0 = semantic embedding net, net 1 holds the
//     prototype bank as w1 (p x d) with an empty second layer;
//   ranking methods:   net 0 = visual branch, net 1 = semantic branch.
constexpr const char* kCheckpointFile = "checkpoint.zslw";
constexpr const char* kTrainLogFile = "trainlog.csv";
constexpr const char* kRunConfigFile = "run_config.json";

void write_run_config(const fs::path& out_dir, const std::string& method,
                      const std::string& data, bool l2_normalize,
                      std::uint64_t seed, const ordered_json& config,
                      const std::string& digest) {
  ordered_json echo;
  echo["method"] = method;
  echo["dataset"] = data;
  echo["seed"] = seed;
  echo["l2_normalize"] = l2_normalize;
  echo["config"] = config;
  echo["config_digest"] = digest;
  std::ofstream os(out_dir / kRunConfigFile, std::ios::binary);
  if (!os) throw IoError("cannot write " + (out_dir / kRunConfigFile).string());
  os << echo.dump(2) << "\n";
}

int cmd_train(const TrainArgs& args, const json& file_config,
              const std::function<void(vpb::VpbConfig&)>& apply_vpb_flags,
              const std::function<void(structopt::StructOptConfig&)>&
                  apply_structopt_flags) {
  Method method = parse_method(args.method_name);
  Dataset ds = load_dataset(resolve_manifest(args.data));
  if (args.l2_normalize) l2_normalize_features(ds);

  fs::path out_dir(args.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + args.out + ": " + ec.message());

  if (is_prototype_method(method)) {
    vpb::VpbConfig cfg = vpb_config_from_json(file_config);
    apply_vpb_flags(cfg);
    if (method == Method::vcb) cfg.proto_mode = vpb::ProtoMode::centroid;
    cfg.validate();

    ordered_json config_echo = vpb_config_to_json(cfg);
    std::string digest =
        config_digest(args.method_name, args.l2_normalize, config_echo);

    vpb::TrainResult result = vpb::train(ds, cfg);

    int p = result.bank.protos.rows;
    TwoLayerNet proto_carrier;
    proto_carrier.w1 = result.bank.protos;
    proto_carrier.w2 = Matrix(0, p);
    save_checkpoint((out_dir / kCheckpointFile).string(),
                    {result.net, proto_carrier});
    result.log.save_csv((out_dir / kTrainLogFile).string());
    write_run_config(out_dir, args.method_name, args.data, args.l2_normalize,
                     cfg.seed, config_echo, digest);
  } else {
    structopt::StructOptConfig cfg = structopt_config_from_json(file_config);
    apply_structopt_flags(cfg);
    cfg.variant = (method == Method::srs || method == Method::sr)
                      ? structopt::Variant::SRS
                      : structopt::Variant::BRS;
    if (method == Method::sr || method == Method::br) cfg.lambda_struct = 0.0;
    cfg.validate();

    ordered_json config_echo = structopt_config_to_json(cfg);
    std::string digest =
        config_digest(args.method_name, args.l2_normalize, config_echo);

    structopt::TrainResult result = structopt::train(ds, cfg);
    save_checkpoint((out_dir / kCheckpointFile).string(),
                    {result.nets.visual, result.nets.semantic});
    result.log.save_csv((out_dir / kTrainLogFile).string());
    write_run_config(out_dir, args.method_name, args.data, args.l2_normalize,
                     cfg.seed, config_echo, digest);
  }

  std::cout << "wrote " << (out_dir / kCheckpointFile).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string task = "both";
  std::string out = "eval";
};

int cmd_eval(const EvalArgs& args) {
  if (args.task != "zsl" && args.task != "gzsl" && args.task != "both") {
    throw ValidationError("task must be zsl, gzsl or both");
  }
  fs::path model_dir(args.model);
  json echo = read_json_file((model_dir / kRunConfigFile).string(),
                             "run config");
  Method method = parse_method(echo.at("method").get<std::string>());
  std::uint64_t seed = echo.at("seed").get<std::uint64_t>();
  std::string digest = echo.at("config_digest").get<std::string>();
  bool l2_normalize = echo.at("l2_normalize").get<bool>();

  Dataset ds = load_dataset(resolve_manifest(args.data));
  if (l2_normalize) l2_normalize_features(ds);

  std::vector<TwoLayerNet> nets =
      load_checkpoint((model_dir / kCheckpointFile).string());
  if (nets.size() != 2) {
    throw ValidationError("checkpoint holds " + std::to_string(nets.size()) +
                          " nets, expected 2");
  }

  eval::Recognizer recognizer;
  if (is_prototype_method(method)) {
    const TwoLayerNet& net = nets[0];
    if (net.in_dim() != ds.k || net.out_dim() != ds.d) {
      throw ValidationError(
          "checkpoint/dataset dimension mismatch: embedding net is " +
          std::to_string(net.in_dim()) + "->" + std::to_string(net.out_dim()) +
          ", dataset has k=" + std::to_string(ds.k) + " d=" +
          std::to_string(ds.d));
    }
    if (nets[1].w1.rows != static_cast<int>(ds.seen_classes.size()) ||
        nets[1].w1.cols != ds.d) {
      throw ValidationError("checkpoint prototype bank does not match dataset");
    }
    recognizer = [net, &ds](const Matrix& x, const std::vector<int>& cands) {
      return vpb::recognize(net, ds.attributes, cands, x);
    };
  } else {
    const TwoLayerNet& visual = nets[0];
    const TwoLayerNet& semantic = nets[1];
    if (visual.in_dim() != ds.d || semantic.in_dim() != ds.k ||
        visual.out_dim() != semantic.out_dim()) {
      throw ValidationError(
          "checkpoint/dataset dimension mismatch: visual " +
          std::to_string(visual.in_dim()) + "->" +
          std::to_string(visual.out_dim()) + ", semantic " +
          std::to_string(semantic.in_dim()) + "->" +
          std::to_string(semantic.out_dim()) + ", dataset d=" +
          std::to_string(ds.d) + " k=" + std::to_string(ds.k));
    }
    recognizer = [&nets, &ds](const Matrix& x, const std::vector<int>& cands) {
      return structopt::recognize(nets[0], nets[1], ds.attributes, cands, x);
    };
  }

  const std::set<eval::ReportFormat> formats = {eval::ReportFormat::json,
                                                eval::ReportFormat::csv,
                                                eval::ReportFormat::svg};
  if (args.task == "zsl" || args.task == "both") {
    eval::EvalReport report = eval::eval_zsl(recognizer, ds);
    report.seed = seed;
    report.config_digest = digest;
    eval::emit_report(report, args.out, "report_zsl", formats);
    std::printf("zsl  top1=%.4f\n", *report.top1_zsl);
  }
  if (args.task == "gzsl" || args.task == "both") {
    eval::EvalReport report = eval::eval_gzsl(recognizer, ds);
    report.seed = seed;
    report.config_digest = digest;
    eval::emit_report(report, args.out, "report_gzsl", formats);
    std::printf("gzsl ts=%.4f tr=%.4f H=%.4f\n", *report.acc_ts,
                *report.acc_tr, *report.harmonic_mean);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(const gradcheck::GradCheckConfig& cfg, double tol) {
  std::vector<gradcheck::GradCheckResult> results =
      gradcheck::run_gradcheck(cfg);
  bool ok = true;
  std::string first_failure;
  for (const auto& r : results) {
    bool pass = r.max_rel_err < tol;
    std::printf("%-22s max_rel_err=%.3e %s\n", r.name.c_str(), r.max_rel_err,
                pass ? "PASS" : "FAIL");
    if (!pass && ok) {
      ok = false;
      first_failure = r.name;
    }
  }
  if (!ok) {
    std::cerr << "gradcheck failed: " << first_failure << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"zero-shot learning via visual space optimization"};
  app.require_subcommand(1);

  // synth ---------------------------------------------------------------
  SynthConfig synth_cfg;
  std::string synth_out = "dataset";
  std::string synth_name;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed")
      ->capture_default_str();
  synth_cmd->add_option("--p", synth_cfg.p, "seen classes")
      ->capture_default_str();
  synth_cmd->add_option("--q", synth_cfg.q, "unseen classes")
      ->capture_default_str();
  synth_cmd->add_option("--d", synth_cfg.d, "visual dimension")
      ->capture_default_str();
  synth_cmd->add_option("--k", synth_cfg.k, "semantic dimension")
      ->capture_default_str();
  synth_cmd->add_option("--n", synth_cfg.n_per_class, "instances per class")
      ->capture_default_str();
  synth_cmd->add_option("--sigma", synth_cfg.noise_sigma, "feature noise")
      ->capture_default_str();
  synth_cmd
      ->add_option("--test-seen-frac", synth_cfg.test_seen_frac,
                   "per-class fraction held out for the GZSL seen split")
      ->capture_default_str();
  synth_cmd->add_option("--name", synth_name, "dataset name override");
  synth_cmd->add_option("--out", synth_out, "output directory")
      ->capture_default_str();

  // train ---------------------------------------------------------------
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd
      ->add_option("--method", train_args.method_name,
                   "vpb, vcb (centroid prototypes), srs, sr (no structure "
                   "loss), brs, br")
      ->required();
  train_cmd->add_option("--data", train_args.data, "dataset dir or manifest")
      ->required();
  train_cmd->add_option("--out", train_args.out, "output directory")
      ->capture_default_str();
  train_cmd->add_option("--config", train_args.config_path,
                        "JSON config; flags override file values");
  train_cmd->add_flag("--l2-normalize", train_args.l2_normalize,
                      "L2-normalize features after loading");

  std::uint64_t flag_seed = 42;
  auto* opt_seed = train_cmd->add_option("--seed", flag_seed, "training seed")
                       ->capture_default_str();

  // Flag storage mirrors the config structs; only flags the user actually
  // passed override the config file.
  vpb::VpbConfig vdef;
  structopt::StructOptConfig sdef;
  struct { int batch_size; double lr_proto, lr_embed; int hidden;
           double lambda_emb; int proto_iters, embed_iters, rounds;
  } vf{vdef.batch_size, vdef.lr_proto, vdef.lr_embed, vdef.hidden,
       vdef.lambda_emb, vdef.proto_iters_per_round, vdef.embed_iters_per_round,
       vdef.rounds};
  struct { int batch_classes, batch_per_class; double lr_semantic, lr_visual;
           int hidden_semantic, hidden_visual, embed_dim;
           double alpha1, alpha2, alpha3, beta, lambda_struct, l2_semantic,
               l2_visual; long long iters;
  } sf{sdef.batch_classes, sdef.batch_per_class, sdef.lr_semantic,
       sdef.lr_visual, sdef.hidden_semantic, sdef.hidden_visual, sdef.embed_dim,
       sdef.alpha1, sdef.alpha2, sdef.alpha3, sdef.beta, sdef.lambda_struct,
       sdef.l2_semantic, sdef.l2_visual, sdef.iters};

  std::vector<CLI::Option*> vpb_opts = {
      train_cmd->add_option("--batch-size", vf.batch_size,
                            "prototype-phase batch size")->capture_default_str(),
      train_cmd->add_option("--lr-proto", vf.lr_proto,
                            "prototype learning rate")->capture_default_str(),
      train_cmd->add_option("--lr-embed", vf.lr_embed,
                            "embedding learning rate")->capture_default_str(),
      train_cmd->add_option("--hidden", vf.hidden,
                            "embedding hidden width")->capture_default_str(),
      train_cmd->add_option("--lambda-emb", vf.lambda_emb,
                            "embedding L2 weight")->capture_default_str(),
      train_cmd->add_option("--proto-iters", vf.proto_iters,
                            "prototype iterations per round")
          ->capture_default_str(),
      train_cmd->add_option("--embed-iters", vf.embed_iters,
                            "embedding iterations per round")
          ->capture_default_str(),
      train_cmd->add_option("--rounds", vf.rounds,
                            "alternation rounds")->capture_default_str(),
  };
  std::vector<CLI::Option*> structopt_opts = {
      train_cmd->add_option("--batch-classes", sf.batch_classes,
                            "classes per batch")->capture_default_str(),
      train_cmd->add_option("--batch-per-class", sf.batch_per_class,
                            "instances per class per batch")
          ->capture_default_str(),
      train_cmd->add_option("--lr-semantic", sf.lr_semantic,
                            "semantic branch learning rate")
          ->capture_default_str(),
      train_cmd->add_option("--lr-visual", sf.lr_visual,
                            "visual branch learning rate")
          ->capture_default_str(),
      train_cmd->add_option("--hidden-semantic", sf.hidden_semantic,
                            "semantic hidden width")->capture_default_str(),
      train_cmd->add_option("--hidden-visual", sf.hidden_visual,
                            "visual hidden width")->capture_default_str(),
      train_cmd->add_option("--embed-dim", sf.embed_dim,
                            "embedding space dimension")->capture_default_str(),
      train_cmd->add_option("--alpha1", sf.alpha1,
                            "margin scale, visual->semantic")
          ->capture_default_str(),
      train_cmd->add_option("--alpha2", sf.alpha2,
                            "margin scale, semantic->visual")
          ->capture_default_str(),
      train_cmd->add_option("--alpha3", sf.alpha3,
                            "margin scale, structure")->capture_default_str(),
      train_cmd->add_option("--beta", sf.beta,
                            "reverse-direction weight")->capture_default_str(),
      train_cmd->add_option("--lambda-struct", sf.lambda_struct,
                            "structure loss weight")->capture_default_str(),
      train_cmd->add_option("--l2-semantic", sf.l2_semantic,
                            "semantic branch L2 weight")->capture_default_str(),
      train_cmd->add_option("--l2-visual", sf.l2_visual,
                            "visual branch L2 weight")->capture_default_str(),
      train_cmd->add_option("--iters", sf.iters,
                            "training iterations")->capture_default_str(),
  };

  // eval ----------------------------------------------------------------
  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
  eval_cmd->add_option("--model", eval_args.model,
                       "directory written by train")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset dir or manifest")
      ->required();
  eval_cmd->add_option("--task", eval_args.task, "zsl, gzsl or both")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "report output directory")
      ->capture_default_str();

  // gradcheck -----------------------------------------------------------
  gradcheck::GradCheckConfig gc_cfg;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "finite-difference check of every analytic gradient");
  gc_cmd->add_option("--seeds", gc_cfg.seeds, "random seeds to test")
      ->capture_default_str();
  gc_cmd->add_option("--d", gc_cfg.d, "visual dimension")->capture_default_str();
  gc_cmd->add_option("--k", gc_cfg.k, "semantic dimension")
      ->capture_default_str();
  gc_cmd->add_option("--hidden", gc_cfg.hidden, "hidden width")
      ->capture_default_str();
  gc_cmd->add_option("--embed-dim", gc_cfg.embed_dim, "embedding dimension")
      ->capture_default_str();
  gc_cmd->add_option("--eps", gc_cfg.eps, "finite-difference step")
      ->capture_default_str();
  gc_cmd->add_option("--tol", gc_tol, "max relative error allowed")
      ->capture_default_str();
  gc_cmd->add_flag("--inject-fault", gc_cfg.inject_fault,
                   "scale one gradient by 2 to prove the check detects it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) {
      Dataset ds = synth(synth_cfg);
      if (!synth_name.empty()) ds.name = synth_name;
      std::cout << save_dataset(ds, synth_out) << "\n";
      return 0;
    }
    if (train_cmd->parsed()) {
      Method method = parse_method(train_args.method_name);
      const auto& foreign =
          is_prototype_method(method) ? structopt_opts : vpb_opts;
      for (const CLI::Option* opt : foreign) {
        if (opt->count() > 0) {
          throw ValidationError("flag " + opt->get_name() +
                                " does not apply to method " +
                                train_args.method_name);
        }
      }
      json file_config = json::object();
      if (!train_args.config_path.empty()) {
        file_config = read_json_file(train_args.config_path, "config");
      }
      auto apply_vpb = [&](vpb::VpbConfig& cfg) {
        if (vpb_opts[0]->count()) cfg.batch_size = vf.batch_size;
        if (vpb_opts[1]->count()) cfg.lr_proto = vf.lr_proto;
        if (vpb_opts[2]->count()) cfg.lr_embed = vf.lr_embed;
        if (vpb_opts[3]->count()) cfg.hidden = vf.hidden;
        if (vpb_opts[4]->count()) cfg.lambda_emb = vf.lambda_emb;
        if (vpb_opts[5]->count()) cfg.proto_iters_per_round = vf.proto_iters;
        if (vpb_opts[6]->count()) cfg.embed_iters_per_round = vf.embed_iters;
        if (vpb_opts[7]->count()) cfg.rounds = vf.rounds;
        if (opt_seed->count()) cfg.seed = flag_seed;
      };
      auto apply_structopt = [&](structopt::StructOptConfig& cfg) {
        if (structopt_opts[0]->count()) cfg.batch_classes = sf.batch_classes;
        if (structopt_opts[1]->count()) cfg.batch_per_class = sf.batch_per_class;
        if (structopt_opts[2]->count()) cfg.lr_semantic = sf.lr_semantic;
        if (structopt_opts[3]->count()) cfg.lr_visual = sf.lr_visual;
        if (structopt_opts[4]->count()) cfg.hidden_semantic = sf.hidden_semantic;
        if (structopt_opts[5]->count()) cfg.hidden_visual = sf.hidden_visual;
        if (structopt_opts[6]->count()) cfg.embed_dim = sf.embed_dim;
        if (structopt_opts[7]->count()) cfg.alpha1 = sf.alpha1;
        if (structopt_opts[8]->count()) cfg.alpha2 = sf.alpha2;
        if (structopt_opts[9]->count()) cfg.alpha3 = sf.alpha3;
        if (structopt_opts[10]->count()) cfg.beta = sf.beta;
        if (structopt_opts[11]->count()) cfg.lambda_struct = sf.lambda_struct;
        if (structopt_opts[12]->count()) cfg.l2_semantic = sf.l2_semantic;
        if (structopt_opts[13]->count()) cfg.l2_visual = sf.l2_visual;
        if (structopt_opts[14]->count()) cfg.iters = sf.iters;
        if (opt_seed->count()) cfg.seed = flag_seed;
      };
      return cmd_train(train_args, file_config, apply_vpb, apply_structopt);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_cfg, gc_tol);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full = args;
  full.insert(full.begin(), "zsl");
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace zsl::cli
