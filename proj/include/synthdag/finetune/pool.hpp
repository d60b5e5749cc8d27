#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/dag/io.hpp"
#include "synthdag/dag/synthesis_dag.hpp"

namespace synthdag::finetune {

struct PoolEntry {
  dag::SynthesisDAG dag;
  std::string smiles;  // final product, canonical
  double score = 0;
  int round = 0;       // 0: seeded from the training set
  std::string key;     // final smiles plus wiring
};

// Cumulative pool of scored DAGs, unique by (final product, wiring). Never
// evicts.
class Pool {
 public:
  // False when the DAG is already pooled.
  bool add(dag::SynthesisDAG d, double score, int round) {
    std::string key = dag::dag_key(d);
    if (!keys_.insert(key).second) return false;
    std::string smiles = d.final_node().mol->smiles;
    entries_.push_back({std::move(d), std::move(smiles), score, round, std::move(key)});
    return true;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const dag::SynthesisDAG& d) const { return keys_.count(dag::dag_key(d)) != 0; }
  const std::vector<PoolEntry>& entries() const { return entries_; }

  // Highest score first; ties by smiles, then wiring.
  std::vector<const PoolEntry*> ranked() const {
    std::vector<const PoolEntry*> r;
    r.reserve(entries_.size());
    for (const auto& e : entries_) r.push_back(&e);
    std::sort(r.begin(), r.end(), [](const PoolEntry* a, const PoolEntry* b) {
      if (a->score != b->score) return a->score > b->score;
      if (a->smiles != b->smiles) return a->smiles < b->smiles;
      return a->key < b->key;
    });
    return r;
  }

  std::vector<const PoolEntry*> top(std::size_t k) const {
    auto r = ranked();
    if (r.size() > k) r.resize(k);
    return r;
  }

  double max_score() const {
    if (entries_.empty()) throw Error("pool is empty");
    double m = entries_.front().score;
    for (const auto& e : entries_) m = std::max(m, e.score);
    return m;
  }

  void write_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const PoolEntry* e : ranked()) {
      out << nlohmann::json{{"smiles", e->smiles}, {"score", e->score}, {"round", e->round}, {"dag", dag::to_json(e->dag)}}
                 .dump()
          << '\n';
    }
  }

 private:
  std::vector<PoolEntry> entries_;
  std::unordered_set<std::string> keys_;
};

}  // namespace synthdag::finetune
