#pragma once

#include <functional>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/finetune/objective.hpp"
#include "synthdag/finetune/pool.hpp"
#include "synthdag/model/sampling.hpp"
#include "synthdag/model/train.hpp"

namespace synthdag::finetune {

struct HillClimbOptions {
  int rounds = 10;      // I
  int samples = 500;    // N per round
  int topk = 100;       // K
  int epochs_per_round = 2;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_steps = -1;
};

inline void to_json(nlohmann::json& j, const HillClimbOptions& o) {
  j = {{"rounds", o.rounds}, {"samples", o.samples}, {"topk", o.topk}, {"epochs_per_round", o.epochs_per_round},
       {"batch_size", o.batch_size}, {"lr", o.lr}, {"seed", o.seed}, {"workers", o.workers}, {"max_steps", o.max_steps}};
}

struct RoundLog {
  int round = 0;
  std::size_t sampled = 0;
  std::size_t new_entries = 0;
  std::size_t pool_size = 0;
  double pool_max = 0;
  double topk_mean = 0;
};

struct HillClimbResult {
  Pool pool;
  std::vector<RoundLog> trajectory;  // entry 0 is the seeded pool
};

namespace detail {

// Scores each distinct final product once and adds the DAGs to the pool.
inline std::size_t score_into(Pool& pool, Objective& objective, std::vector<dag::SynthesisDAG> dags, int round,
                              std::unordered_map<std::string, double>& cache) {
  std::vector<chem::MolPtr> todo;
  for (const auto& d : dags) {
    const auto& m = d.final_node().mol;
    if (!cache.count(m->smiles) &&
        std::find_if(todo.begin(), todo.end(), [&](const chem::MolPtr& x) { return x->smiles == m->smiles; }) == todo.end()) {
      todo.push_back(m);
    }
  }
  const auto scores = objective.score_batch(todo);
  for (std::size_t i = 0; i < todo.size(); ++i) cache.emplace(todo[i]->smiles, scores[i]);
  std::size_t added = 0;
  for (auto& d : dags) {
    const double s = cache.at(d.final_node().mol->smiles);
    added += pool.add(std::move(d), s, round) ? 1 : 0;
  }
  return added;
}

inline RoundLog summarize(const Pool& pool, int round, std::size_t sampled, std::size_t added, int topk) {
  RoundLog r{round, sampled, added, pool.size(), pool.max_score(), 0.0};
  const auto top = pool.top(static_cast<std::size_t>(topk));
  for (const PoolEntry* e : top) r.topk_mean += e->score;
  r.topk_mean /= static_cast<double>(top.size());
  return r;
}

}  // namespace detail

// Seeds the pool with the scored training set, then per round: sample N DAGs,
// score their final products, merge, and train on the top K for a fixed
// number of epochs. Adam state carries over between rounds. DAGs whose final
// node is a building block carry no reaction and are not pooled.
template <class T>
HillClimbResult hill_climb(model::DogModel<T>& model, Objective& objective, oracle::ReactionOracle& oracle,
                           const dag::Catalog& catalog, const std::vector<dag::SynthesisDAG>& train_set,
                           const HillClimbOptions& o, const std::function<void(const RoundLog&)>& on_round = {}) {
  if (model.config().mode != model::Mode::gen) throw ConfigError("hill_climb needs a gen-mode model");
  if (o.rounds < 0 || o.samples < 1 || o.topk < 1 || o.epochs_per_round < 0) throw ConfigError("hill_climb: bad options");
  if (train_set.empty()) throw Error("hill_climb: empty training set");
  HillClimbResult res;
  std::unordered_map<std::string, double> cache;
  const Rng root(o.seed);
  const std::size_t seeded = detail::score_into(res.pool, objective, train_set, 0, cache);
  res.trajectory.push_back(detail::summarize(res.pool, 0, train_set.size(), seeded, o.topk));
  if (on_round) on_round(res.trajectory.back());

  for (int round = 1; round <= o.rounds; ++round) {
    model::SampleOptions so;
    so.n = static_cast<std::size_t>(o.samples);
    so.seed = root.child("sample", static_cast<std::uint64_t>(round)).next_u64();
    so.workers = o.workers;
    so.max_steps = o.max_steps;
    std::vector<dag::SynthesisDAG> dags;
    for (auto& d : model::sample_many(model, catalog, oracle, so)) {
      if (d.dag.final_node().kind == dag::NodeKind::product) dags.push_back(std::move(d.dag));
    }
    const std::size_t added = detail::score_into(res.pool, objective, std::move(dags), round, cache);

    std::vector<dag::SynthesisDAG> top;
    for (const PoolEntry* e : res.pool.top(static_cast<std::size_t>(o.topk))) top.push_back(e->dag);
    model::TrainSchedule sched;
    sched.epochs = o.epochs_per_round;
    sched.batch_size = o.batch_size;
    sched.lr = o.lr;
    sched.seed = root.child("train", static_cast<std::uint64_t>(round)).next_u64();
    model::train(model, std::move(top), {}, catalog, sched);

    res.trajectory.push_back(detail::summarize(res.pool, round, so.n, added, o.topk));
    if (on_round) on_round(res.trajectory.back());
  }
  return res;
}

struct Report {
  double best = 0;
  double mean_top = 0;
  std::size_t top_n = 0;
  std::vector<double> trajectory;  // pool max after each round

  nlohmann::json to_json() const {
    return {{"best", best}, {"mean_top", mean_top}, {"top_n", top_n}, {"trajectory", trajectory}};
  }
};

inline Report report(const Pool& pool, std::size_t top_n, const std::vector<RoundLog>& rounds = {}) {
  if (pool.empty()) throw Error("report: empty pool");
  if (top_n == 0) throw ConfigError("report: top_n must be positive");
  Report r;
  const auto top = pool.top(top_n);
  r.best = top.front()->score;
  for (const PoolEntry* e : top) r.mean_top += e->score;
  r.top_n = top.size();
  r.mean_top /= static_cast<double>(top.size());
  for (const auto& g : rounds) r.trajectory.push_back(g.pool_max);
  return r;
}

inline void write_trajectory(const std::string& path, const std::vector<RoundLog>& rounds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "round,sampled,new_entries,pool_size,pool_max,topk_mean\n";
  out.precision(17);
  for (const auto& r : rounds) {
    out << r.round << ',' << r.sampled << ',' << r.new_entries << ',' << r.pool_size << ',' << r.pool_max << ','
        << r.topk_mean << '\n';
  }
}

}  // namespace synthdag::finetune
