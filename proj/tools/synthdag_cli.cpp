#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "synthdag/dag/io.hpp"
#include "synthdag/dag/stats.hpp"
#include "synthdag/eval/metrics.hpp"
#include "synthdag/finetune/hill_climb.hpp"
#include "synthdag/forge/dataset.hpp"
#include "synthdag/model/reconstruct.hpp"
#include "synthdag/model/sampling.hpp"
#include "synthdag/model/train.hpp"
#include "synthdag/oracle/http.hpp"

#ifndef SYNTHDAG_VERSION
#define SYNTHDAG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace synthdag;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

struct OracleFlags {
  std::string spec;
  int timeout_ms = 10000;
  bool fallback_on_error = false;
};

// Run directory: config.json up front, outputs/ during, manifest.json last.
class RunDir {
 public:
  RunDir(std::string subcommand, const Common& c, json config)
      : sub_(std::move(subcommand)), seed_(c.seed), root_(c.out), start_(std::chrono::steady_clock::now()) {
    if (c.out.empty()) throw ConfigError("--out is required");
    fs::create_directories(root_ / "outputs");
    config["subcommand"] = sub_;
    config["seed"] = seed_;
    write_json(root_ / "config.json", config);
  }

  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  // Leaves a manifest behind when the run dies with an exception.
  ~RunDir() {
    if (finished_) return;
    try {
      write_json(root_ / "manifest.json", {{"subcommand", sub_}, {"seed", seed_}, {"status", "error"}, {"outputs", outputs_}});
    } catch (...) {
    }
  }

  fs::path output(const std::string& name) {
    outputs_.push_back("outputs/" + name);
    return root_ / "outputs" / name;
  }
  fs::path outputs_dir() const { return root_ / "outputs"; }

  void finish(json summary = json::object()) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"subcommand", sub_},
              {"seed", seed_},
              {"status", "ok"},
              {"wall_time_s", secs},
              {"outputs", outputs_},
              {"summary", std::move(summary)},
              {"versions",
               {{"synthdag", SYNTHDAG_VERSION},
                {"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}}}};
    write_json(root_ / "manifest.json", m);
    finished_ = true;
  }

  static void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << j.dump(2) << '\n';
  }

 private:
  std::string sub_;
  std::uint64_t seed_;
  fs::path root_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  bool finished_ = false;
};

// "lookup:reactions.txt" or "http:host:port[/prefix]".
std::unique_ptr<oracle::ReactionOracle> make_oracle(const OracleFlags& f) {
  const auto colon = f.spec.find(':');
  if (colon == std::string::npos) throw ConfigError("--oracle must be lookup:PATH or http:URL, got '" + f.spec + "'");
  const std::string kind = f.spec.substr(0, colon);
  const std::string arg = f.spec.substr(colon + 1);
  if (kind == "lookup") return std::make_unique<oracle::LookupOracle>(forge::load_reaction_table(arg));
  if (kind == "http") {
    oracle::HttpOracleOptions o;
    o.timeout_ms = f.timeout_ms;
    o.on_error = f.fallback_on_error ? oracle::FailurePolicy::fallback : oracle::FailurePolicy::fail;
    return std::make_unique<oracle::HttpOracle>(arg.find("://") == std::string::npos ? "http://" + arg : arg, o);
  }
  throw ConfigError("unknown oracle kind '" + kind + "'");
}

json oracle_json(const OracleFlags& f) {
  return {{"spec", f.spec}, {"timeout_ms", f.timeout_ms}, {"fallback_on_error", f.fallback_on_error}};
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app->add_option("--out", c.out, "Run directory")->required();
}

void add_oracle(CLI::App* app, OracleFlags& f) {
  app->add_option("--oracle", f.spec, "lookup:PATH or http:URL")->required();
  app->add_option("--oracle-timeout-ms", f.timeout_ms, "HTTP oracle timeout")->capture_default_str();
  app->add_flag("--oracle-fallback", f.fallback_on_error, "On HTTP oracle errors return a random reactant instead of failing");
}

void add_model_flags(CLI::App* app, model::ModelConfig& c) {
  app->add_option("--ggnn-steps", c.ggnn_steps)->capture_default_str();
  app->add_option("--atom-hidden", c.atom_hidden)->capture_default_str();
  app->add_option("--mol-dim", c.mol_dim)->capture_default_str();
  app->add_option("--action-embed-dim", c.action_embed_dim)->capture_default_str();
  app->add_option("--context-layers", c.context_layers)->capture_default_str();
  app->add_option("--context-width", c.context_width)->capture_default_str();
  app->add_option("--action-hidden", c.action_hidden)->capture_default_str();
  app->add_option("--latent-dim", c.latent_dim)->capture_default_str();
  app->add_option("--encoder-steps", c.encoder_steps)->capture_default_str();
  app->add_option("--dropout", c.dropout)->capture_default_str();
  app->add_option("--mmd-lambda", c.mmd_lambda)->capture_default_str();
  app->add_option("--max-steps", c.max_steps)->capture_default_str();
}

struct LoadedModel {
  std::unique_ptr<model::DogModel<float>> model;
  dag::Catalog catalog;
  json hyper;
};

// The catalog comes from --blocks when given, else from the checkpoint.
LoadedModel load(const std::string& checkpoint, const std::string& blocks) {
  nn::Checkpoint c = nn::load_checkpoint(checkpoint);
  LoadedModel m;
  m.hyper = c.hyper;
  const model::ModelConfig cfg = c.model.get<model::ModelConfig>();
  m.model = std::make_unique<model::DogModel<float>>(cfg, std::move(c.store));
  if (!blocks.empty()) {
    m.catalog = dag::Catalog::load(blocks);
  } else if (m.hyper.contains("meta") && m.hyper["meta"].contains("blocks")) {
    m.catalog = dag::Catalog::from_smiles(m.hyper["meta"]["blocks"].get<std::vector<std::string>>());
  } else {
    throw ConfigError("checkpoint has no building blocks; pass --blocks");
  }
  if (m.catalog.empty()) throw ConfigError("empty building-block catalog");
  return m;
}

std::vector<std::string> block_smiles(const dag::Catalog& c) {
  std::vector<std::string> s;
  for (const auto& b : c.blocks()) s.push_back(b->smiles);
  return s;
}

std::vector<dag::SynthesisDAG> read_dags(const std::string& path) {
  auto d = dag::read_jsonl(path);
  if (d.empty()) throw Error("no DAGs in " + path);
  return d;
}

// ---- build-dataset ----------------------------------------------------------

struct BuildDataset {
  Common c;
  std::string reactions, blocks;
  std::vector<double> split = {0.9, 0.05, 0.05};

  void run() {
    if (split.size() != 3) throw ConfigError("--split needs three fractions");
    RunDir dir("build-dataset", c, {{"reactions", reactions}, {"blocks", blocks}, {"split", split}});
    const forge::Dataset d = forge::build_dataset(reactions, dag::Catalog::load(blocks));
    const forge::Split s = forge::split_corpus(d.dags, {split[0], split[1], split[2]}, Rng(c.seed).child("split").next_u64());
    forge::write_dataset(dir.outputs_dir().string(), d, s);
    for (const char* f : {"dags.jsonl", "train.jsonl", "valid.jsonl", "test.jsonl", "split.json", "rejects.tsv",
                          "network_reactions.txt"}) {
      dir.output(f);
    }
    json summary = d.summary.to_json();
    summary["train"] = s.train.size();
    summary["valid"] = s.valid.size();
    summary["test"] = s.test.size();
    std::cout << "dags " << d.dags.size() << " (train " << s.train.size() << ", valid " << s.valid.size() << ", test "
              << s.test.size() << "), rejected lines " << d.rejects.size() << "\n";
    dir.finish(summary);
  }
};

// ---- train-gen / train-ae ---------------------------------------------------

struct Train {
  Common c;
  model::Mode mode;
  model::ModelConfig cfg;
  std::string train, valid, blocks, init;
  int epochs, batch_size = 64, checkpoint_every = 0;
  double lr = 1e-3, lr_factor = 0.1;
  std::vector<int> milestones;

  explicit Train(model::Mode m) : mode(m) {
    cfg = m == model::Mode::ae ? model::ModelConfig::ae_defaults() : model::ModelConfig{};
    cfg.mode = m;
    epochs = m == model::Mode::ae ? 400 : 30;
    if (m == model::Mode::ae) milestones = {300, 350};
  }

  void run() {
    const std::string name = mode == model::Mode::ae ? "train-ae" : "train-gen";
    cfg.validate();
    RunDir dir(name, c,
               {{"train", train}, {"valid", valid}, {"blocks", blocks}, {"init", init}, {"model", cfg},
                {"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"milestones", milestones},
                {"lr_factor", lr_factor}, {"checkpoint_every", checkpoint_every}});
    const dag::Catalog catalog = dag::Catalog::load(blocks);
    const auto corpus = read_dags(train);
    const std::vector<dag::SynthesisDAG> val = valid.empty() ? std::vector<dag::SynthesisDAG>{} : dag::read_jsonl(valid);
    std::unique_ptr<model::DogModel<float>> m;
    if (init.empty()) {
      m = std::make_unique<model::DogModel<float>>(cfg, Rng(c.seed).child("init").next_u64());
    } else {
      m = model::load_model(init);
      if (m->config().mode != mode) throw ConfigError("--init checkpoint has the wrong mode");
    }
    model::TrainSchedule s;
    s.epochs = epochs;
    s.batch_size = batch_size;
    s.lr = lr;
    s.milestones = milestones;
    s.lr_factor = lr_factor;
    s.checkpoint_every = checkpoint_every;
    s.out_dir = dir.outputs_dir();
    s.seed = Rng(c.seed).child("train").next_u64();
    s.meta = {{"blocks", block_smiles(catalog)}};
    s.on_epoch = [](const model::EpochLog& e) {
      std::cout << "epoch " << e.epoch << " " << e.split << " nll " << e.nll;
      if (e.mmd != 0) std::cout << " mmd " << e.mmd;
      std::cout << "\n" << std::flush;
    };
    const auto log = model::train(*m, corpus, val, catalog, s);
    dir.output("train_log.csv");
    dir.output("checkpoint.json");
    json summary = {{"dags", corpus.size()}, {"epochs", epochs}};
    if (!log.empty()) summary["final_train_nll"] = log.back().split == "train" ? log.back().nll : log[log.size() - 2].nll;
    dir.finish(summary);
  }
};

// ---- sample -------------------------------------------------------------------

struct Sample {
  Common c;
  OracleFlags oracle;
  std::string checkpoint, blocks;
  std::size_t n = 1000;
  int workers = 1;
  bool greedy = false;

  void run() {
    RunDir dir("sample", c,
               {{"checkpoint", checkpoint}, {"blocks", blocks}, {"oracle", oracle_json(oracle)}, {"n", n},
                {"workers", workers}, {"greedy", greedy}});
    LoadedModel lm = load(checkpoint, blocks);
    auto orc = make_oracle(oracle);
    model::SampleOptions o;
    o.n = n;
    o.seed = Rng(c.seed).child("sample").next_u64();
    o.workers = workers;
    o.greedy = greedy;
    const auto out = model::sample_many(*lm.model, lm.catalog, *orc, o);
    std::vector<dag::SynthesisDAG> dags;
    std::size_t valid = 0;
    {
      std::ofstream smi(dir.output("finals.smi"));
      std::ofstream seq(dir.output("sequences.txt"));
      for (const auto& d : out) {
        valid += dag::is_valid(d.dag) ? 1 : 0;
        smi << d.dag.final_node().mol->smiles << '\n';
        seq << dag::to_text(d.seq) << '\n';
        dags.push_back(d.dag);
      }
    }
    dag::write_jsonl(dir.output("dags.jsonl").string(), dags);
    std::cout << "sampled " << n << " DAGs, valid " << valid << "\n";
    dir.finish({{"samples", n}, {"valid", valid}});
  }
};

// ---- encode -------------------------------------------------------------------

struct Encode {
  Common c;
  std::string checkpoint, dags;

  void run() {
    RunDir dir("encode", c, {{"checkpoint", checkpoint}, {"dags", dags}});
    auto m = model::load_model(checkpoint);
    if (m->config().mode != model::Mode::ae) throw ConfigError("encode needs an ae-mode checkpoint");
    const auto corpus = read_dags(dags);
    std::ofstream out(dir.output("latents.jsonl"));
    const std::size_t chunk = 64;
    for (std::size_t b = 0; b < corpus.size(); b += chunk) {
      const std::size_t e = std::min(corpus.size(), b + chunk);
      const auto mu = m->encode_mean(std::span<const dag::SynthesisDAG>(corpus).subspan(b, e - b));
      for (std::size_t i = b; i < e; ++i) {
        std::vector<float> row(mu.row(static_cast<Eigen::Index>(i - b)).data(),
                               mu.row(static_cast<Eigen::Index>(i - b)).data() + mu.cols());
        out << json{{"index", i}, {"final", corpus[i].final_node().mol->smiles}, {"mu", row}}.dump() << '\n';
      }
    }
    dir.finish({{"dags", corpus.size()}});
  }
};

// ---- walk ---------------------------------------------------------------------

struct Walk {
  Common c;
  OracleFlags oracle;
  std::string checkpoint, blocks, dags;
  std::size_t start = 0;
  std::size_t n = 10;
  double step = 0.5;
  int max_points = 1000;

  void run() {
    RunDir dir("walk", c,
               {{"checkpoint", checkpoint}, {"blocks", blocks}, {"oracle", oracle_json(oracle)}, {"dags", dags},
                {"start", start}, {"n", n}, {"step", step}, {"max_points", max_points}});
    LoadedModel lm = load(checkpoint, blocks);
    if (lm.model->config().mode != model::Mode::ae) throw ConfigError("walk needs an ae-mode checkpoint");
    auto orc = make_oracle(oracle);
    Rng rng = Rng(c.seed).child("walk");
    nn::Mat<float> z0;
    if (dags.empty()) {
      z0 = lm.model->normal(rng, 1);
    } else {
      const auto corpus = read_dags(dags);
      if (start >= corpus.size()) throw ConfigError("--start is past the end of the DAG file");
      z0 = lm.model->encode_mean(std::span<const dag::SynthesisDAG>(&corpus[start], 1));
    }
    const auto w = model::latent_walk(*lm.model, z0, step, n, lm.catalog, *orc, rng, max_points);
    {
      std::ofstream out(dir.output("walk.jsonl"));
      for (std::size_t i = 0; i < w.dags.size(); ++i) {
        std::vector<float> z(w.points[i].data(), w.points[i].data() + w.points[i].size());
        out << json{{"z", z}, {"dag", dag::to_json(w.dags[i].dag)}}.dump() << '\n';
      }
    }
    std::ofstream(dir.output("union.dot")) << w.graph.to_dot();
    dir.finish({{"distinct_dags", w.dags.size()}, {"union_molecules", w.graph.molecules.size()}});
  }
};

// ---- finetune -------------------------------------------------------------------

struct Finetune {
  Common c;
  OracleFlags oracle;
  std::string checkpoint, blocks, train, objective, corpus;
  finetune::HillClimbOptions o;
  std::size_t report_top = 100;
  bool dry_run = false;

  void run() {
    RunDir dir("finetune", c,
               {{"checkpoint", checkpoint}, {"blocks", blocks}, {"train", train}, {"oracle", oracle_json(oracle)},
                {"objective", objective}, {"hill_climb", o}, {"report_top", report_top}, {"corpus", corpus}});
    LoadedModel lm = load(checkpoint, blocks);
    auto orc = make_oracle(oracle);
    auto obj = finetune::parse_objective(objective);
    const auto start = read_dags(train);
    if (o.rounds < 0 || o.samples < 1 || o.topk < 1) throw ConfigError("finetune: -I must be >= 0, -N and -K >= 1");
    if (dry_run) {
      dir.finish({{"dry_run", true}});
      return;
    }
    finetune::HillClimbOptions opts = o;
    opts.seed = Rng(c.seed).child("finetune").next_u64();
    const auto res = finetune::hill_climb(*lm.model, *obj, *orc, lm.catalog, start, opts, [](const finetune::RoundLog& r) {
      std::cout << "round " << r.round << " pool " << r.pool_size << " max " << r.pool_max << " top-k mean "
                << r.topk_mean << "\n"
                << std::flush;
    });
    res.pool.write_jsonl(dir.output("pool.jsonl").string());
    finetune::write_trajectory(dir.output("trajectory.csv").string(), res.trajectory);
    const finetune::Report rep = finetune::report(res.pool, report_top, res.trajectory);
    json summary = rep.to_json();
    std::vector<dag::SynthesisDAG> top;
    for (const auto* e : res.pool.top(report_top)) top.push_back(e->dag);
    std::unique_ptr<eval::ReactionCorpusIndex> idx;
    if (!corpus.empty()) idx = std::make_unique<eval::ReactionCorpusIndex>(eval::ReactionCorpusIndex::load(corpus));
    const eval::SynthSummary ss = eval::synth_summary(top, idx.get());
    if (!std::isnan(ss.median_steps)) summary["top_median_steps"] = ss.median_steps;
    if (!std::isnan(ss.mean_score)) summary["top_synth_mean_score"] = ss.mean_score;
    RunDir::write_json(dir.output("report.json"), summary);
    model::save_model(dir.output("checkpoint.json"), *lm.model, json{{"meta", {{"blocks", block_smiles(lm.catalog)}}}});
    dir.finish(summary);
  }
};

// ---- score ----------------------------------------------------------------------

struct Score {
  Common c;
  std::string dags, smiles, train, corpus;

  void run() {
    RunDir dir("score", c, {{"dags", dags}, {"smiles", smiles}, {"train", train}, {"corpus", corpus}});
    if (dags.empty() == smiles.empty()) throw ConfigError("pass exactly one of --dags or --smiles");
    std::vector<std::string> finals;
    std::vector<dag::SynthesisDAG> ds;
    if (!dags.empty()) {
      ds = read_dags(dags);
      for (const auto& d : ds) finals.push_back(d.final_node().mol->smiles);
    } else {
      std::ifstream in(smiles);
      if (!in) throw IoError("cannot read " + smiles);
      std::string line;
      while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        if (ss >> tok) finals.push_back(tok);
      }
    }
    std::unordered_set<std::string> train_set;
    if (!train.empty()) train_set = eval::final_products(dag::read_jsonl(train));
    eval::SampleReport r = eval::sample_metrics(finals, train_set);
    std::unique_ptr<eval::ReactionCorpusIndex> idx;
    if (!corpus.empty()) idx = std::make_unique<eval::ReactionCorpusIndex>(eval::ReactionCorpusIndex::load(corpus));
    if (!ds.empty()) r.synth = eval::synth_summary(ds, idx.get());
    RunDir::write_json(dir.output("report.json"), r.to_json());
    std::cout << std::fixed << std::setprecision(3) << "samples      " << r.samples << "\n"
              << "validity     " << r.validity << "\n"
              << "uniqueness   " << r.uniqueness << "\n"
              << "novelty      " << r.novelty << "\n";
    if (!std::isnan(r.synth.median_steps)) std::cout << "median steps " << r.synth.median_steps << "\n";
    if (!std::isnan(r.synth.mean_score)) std::cout << "synth score  " << r.synth.mean_score << "\n";
    dir.finish(r.to_json());
  }
};

// ---- stats ----------------------------------------------------------------------

struct Stats {
  Common c;
  std::string dags;

  void run() {
    RunDir dir("stats", c, {{"dags", dags}});
    const auto corpus = read_dags(dags);
    Rng rng = Rng(c.seed).child("serialize");
    const dag::DagStats s = dag::dag_stats(corpus, rng);
    const eval::SynthSummary ss = eval::synth_summary(corpus, nullptr);
    json j = {{"count", s.count},           {"mean_nodes", s.mean_nodes}, {"mean_heavy_atoms", s.mean_heavy_atoms},
              {"mean_bonds", s.mean_bonds}, {"mean_actions", s.mean_actions}};
    if (!std::isnan(ss.median_steps)) j["median_steps"] = ss.median_steps;
    RunDir::write_json(dir.output("stats.json"), j);
    std::cout << j.dump(2) << "\n";
    dir.finish(j);
  }
};

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesis-DAG generative models: dataset building, training, sampling and optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SYNTHDAG_VERSION);

  BuildDataset bd;
  auto* s_bd = app.add_subcommand("build-dataset", "Reaction file + building blocks -> DAG corpus and split");
  add_common(s_bd, bd.c);
  s_bd->add_option("--reactions", bd.reactions, "Reaction SMILES file")->required()->check(CLI::ExistingFile);
  s_bd->add_option("--blocks", bd.blocks, "Building blocks .smi")->required()->check(CLI::ExistingFile);
  s_bd->add_option("--split", bd.split, "train valid test fractions")->expected(3)->capture_default_str();

  Train tg(model::Mode::gen), ta(model::Mode::ae);
  for (auto* t : {&tg, &ta}) {
    const bool ae = t->mode == model::Mode::ae;
    auto* s = app.add_subcommand(ae ? "train-ae" : "train-gen", ae ? "Train the autoencoder" : "Train the generator");
    add_common(s, t->c);
    add_model_flags(s, t->cfg);
    s->add_option("--train", t->train, "Training DAGs (.jsonl)")->required()->check(CLI::ExistingFile);
    s->add_option("--valid", t->valid, "Validation DAGs (.jsonl)")->check(CLI::ExistingFile);
    s->add_option("--blocks", t->blocks, "Building blocks .smi")->required()->check(CLI::ExistingFile);
    s->add_option("--init", t->init, "Continue from a checkpoint")->check(CLI::ExistingFile);
    s->add_option("--epochs", t->epochs)->capture_default_str();
    s->add_option("--batch-size", t->batch_size)->capture_default_str();
    s->add_option("--lr", t->lr)->capture_default_str();
    s->add_option("--milestones", t->milestones, "Epochs at which lr is multiplied by --lr-factor");
    s->add_option("--lr-factor", t->lr_factor)->capture_default_str();
    s->add_option("--checkpoint-every", t->checkpoint_every, "0: final checkpoint only")->capture_default_str();
  }

  Sample sm;
  auto* s_sm = app.add_subcommand("sample", "Sample DAGs from a trained model");
  add_common(s_sm, sm.c);
  add_oracle(s_sm, sm.oracle);
  s_sm->add_option("--checkpoint", sm.checkpoint)->required()->check(CLI::ExistingFile);
  s_sm->add_option("--blocks", sm.blocks, "Override the checkpoint's building blocks")->check(CLI::ExistingFile);
  s_sm->add_option("--n", sm.n)->capture_default_str();
  s_sm->add_option("--workers", sm.workers)->capture_default_str()->check(CLI::PositiveNumber);
  s_sm->add_flag("--greedy", sm.greedy);

  Encode en;
  auto* s_en = app.add_subcommand("encode", "Posterior means of DAGs under an autoencoder");
  add_common(s_en, en.c);
  s_en->add_option("--checkpoint", en.checkpoint)->required()->check(CLI::ExistingFile);
  s_en->add_option("--dags", en.dags)->required()->check(CLI::ExistingFile);

  Walk wk;
  auto* s_wk = app.add_subcommand("walk", "Random walk in latent space");
  add_common(s_wk, wk.c);
  add_oracle(s_wk, wk.oracle);
  s_wk->add_option("--checkpoint", wk.checkpoint)->required()->check(CLI::ExistingFile);
  s_wk->add_option("--blocks", wk.blocks)->check(CLI::ExistingFile);
  s_wk->add_option("--dags", wk.dags, "Start from the encoding of one of these DAGs")->check(CLI::ExistingFile);
  s_wk->add_option("--start", wk.start, "Index into --dags")->capture_default_str();
  s_wk->add_option("--n", wk.n, "Distinct DAGs to collect")->capture_default_str();
  s_wk->add_option("--step", wk.step, "Gaussian step size")->capture_default_str();
  s_wk->add_option("--max-points", wk.max_points)->capture_default_str();

  Finetune ft;
  auto* s_ft = app.add_subcommand("finetune", "Hill-climb a generator toward an objective");
  add_common(s_ft, ft.c);
  add_oracle(s_ft, ft.oracle);
  s_ft->add_option("--checkpoint", ft.checkpoint)->required()->check(CLI::ExistingFile);
  s_ft->add_option("--blocks", ft.blocks)->check(CLI::ExistingFile);
  s_ft->add_option("--train", ft.train, "DAGs seeding the pool")->required()->check(CLI::ExistingFile);
  s_ft->add_option("--objective", ft.objective, "tanimoto:SMILES | heavy_atoms:N | ring:N | cmd:PATH")->required();
  s_ft->add_option("-I,--rounds", ft.o.rounds)->capture_default_str();
  s_ft->add_option("-N,--samples-per-round", ft.o.samples)->capture_default_str();
  s_ft->add_option("-K,--topk", ft.o.topk)->capture_default_str();
  s_ft->add_option("--epochs-per-round", ft.o.epochs_per_round)->capture_default_str();
  s_ft->add_option("--batch-size", ft.o.batch_size)->capture_default_str();
  s_ft->add_option("--lr", ft.o.lr)->capture_default_str();
  s_ft->add_option("--workers", ft.o.workers)->capture_default_str()->check(CLI::PositiveNumber);
  s_ft->add_option("--report-top", ft.report_top)->capture_default_str();
  s_ft->add_flag("--dry-run", ft.dry_run, "Check inputs and write config/manifest without running");
  s_ft->add_option("--corpus", ft.corpus, "Reference reactions for the synthesizability score")->check(CLI::ExistingFile);

  Score sc;
  auto* s_sc = app.add_subcommand("score", "Validity, uniqueness, novelty and synthesizability");
  add_common(s_sc, sc.c);
  s_sc->add_option("--dags", sc.dags, "Sampled DAGs (.jsonl)")->check(CLI::ExistingFile);
  s_sc->add_option("--smiles", sc.smiles, "Sampled molecules, one SMILES per line")->check(CLI::ExistingFile);
  s_sc->add_option("--train", sc.train, "Training DAGs for novelty")->check(CLI::ExistingFile);
  s_sc->add_option("--corpus", sc.corpus, "Reference reactions")->check(CLI::ExistingFile);

  Stats st;
  auto* s_st = app.add_subcommand("stats", "Corpus statistics");
  add_common(s_st, st.c);
  s_st->add_option("--dags", st.dags)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (sub == "build-dataset") bd.run();
    if (sub == "train-gen") tg.run();
    if (sub == "train-ae") ta.run();
    if (sub == "sample") sm.run();
    if (sub == "encode") en.run();
    if (sub == "walk") wk.run();
    if (sub == "finetune") ft.run();
    if (sub == "score") sc.run();
    if (sub == "stats") st.run();
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", error_type(e)}, {"subcommand", sub}, {"message", e.what()}}}}.dump() << "\n";
    return dynamic_cast<const ConfigError*>(&e) ? 2 : 1;
  }
  return 0;
}
