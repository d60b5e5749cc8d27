#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synthdag/model/dog_model.hpp"

namespace synthdag::model {

enum class ReconMode { greedy, sample_rank };

struct ReconResult {
  double dag_rate = 0;    // decoded DAG equals the input DAG
  double final_rate = 0;  // decoded final molecule equals the input's
  std::vector<bool> matched;
};

// Decodes each DAG from its posterior mean: greedily, or as the most
// probable of `samples` sampled decodes.
template <class T>
ReconResult reconstruct_rate(DogModel<T>& model, std::span<const SynthesisDAG> dags, const Catalog& catalog,
                             oracle::ReactionOracle& oracle, Rng& rng, ReconMode mode = ReconMode::greedy,
                             int samples = 100) {
  ReconResult r;
  if (dags.empty()) return r;
  std::size_t dag_hits = 0;
  std::size_t final_hits = 0;
  const std::size_t chunk = 64;
  for (std::size_t b = 0; b < dags.size(); b += chunk) {
    const std::size_t e = std::min(dags.size(), b + chunk);
    const typename DogModel<T>::M mu = model.encode_mean(dags.subspan(b, e - b));
    std::vector<Decoded> best;
    if (mode == ReconMode::greedy) {
      best = model.decode(mu, e - b, catalog, oracle, rng, true);
    } else {
      for (std::size_t i = 0; i < e - b; ++i) {
        typename DogModel<T>::M zs = mu.row(static_cast<Eigen::Index>(i)).replicate(samples, 1);
        auto all = model.decode(zs, static_cast<std::size_t>(samples), catalog, oracle, rng, false);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < all.size(); ++k) {
          if (all[k].log_prob > all[arg].log_prob) arg = k;
        }
        best.push_back(std::move(all[arg]));
      }
    }
    for (std::size_t i = 0; i < best.size(); ++i) {
      const SynthesisDAG& want = dags[b + i];
      const bool same = dag::same_dag(best[i].dag, want);
      r.matched.push_back(same);
      dag_hits += same;
      final_hits += best[i].dag.final_node().mol->smiles == want.final_node().mol->smiles;
    }
  }
  r.dag_rate = static_cast<double>(dag_hits) / static_cast<double>(dags.size());
  r.final_rate = static_cast<double>(final_hits) / static_cast<double>(dags.size());
  return r;
}

// Molecules and reaction edges of several DAGs merged by molecule identity.
struct UnionGraph {
  std::vector<std::string> molecules;
  std::set<std::pair<int, int>> edges;
  std::set<int> finals;

  int add(const std::string& smi) {
    for (std::size_t i = 0; i < molecules.size(); ++i) {
      if (molecules[i] == smi) return static_cast<int>(i);
    }
    molecules.push_back(smi);
    return static_cast<int>(molecules.size()) - 1;
  }

  void merge(const SynthesisDAG& d) {
    std::vector<int> id;
    for (const auto& n : d.nodes) id.push_back(add(n.mol->smiles));
    for (auto [a, b] : d.edges) edges.emplace(id[static_cast<std::size_t>(a)], id[static_cast<std::size_t>(b)]);
    finals.insert(id[static_cast<std::size_t>(d.final_id)]);
  }

  std::string to_dot() const {
    std::ostringstream ss;
    ss << "digraph walk {\n";
    for (std::size_t i = 0; i < molecules.size(); ++i) {
      ss << "  n" << i << " [label=\"" << molecules[i] << "\"" << (finals.count(static_cast<int>(i)) ? ", shape=box" : "")
         << "];\n";
    }
    for (auto [a, b] : edges) ss << "  n" << a << " -> n" << b << ";\n";
    ss << "}\n";
    return ss.str();
  }
};

template <class T>
struct WalkResult {
  std::vector<Decoded> dags;
  std::vector<nn::Mat<T>> points;
  UnionGraph graph;
};

// Gaussian random walk from z0, greedy-decoding at every point, until n
// distinct DAGs have been seen.
template <class T>
WalkResult<T> latent_walk(DogModel<T>& model, const nn::Mat<T>& z0, double step_size, std::size_t n,
                          const Catalog& catalog, oracle::ReactionOracle& oracle, Rng& rng, int max_points = 1000) {
  if (n == 0) throw Error("latent_walk: n must be positive");
  WalkResult<T> out;
  std::set<std::string> seen;
  nn::Mat<T> z = z0;
  for (int k = 0; k < max_points; ++k) {
    if (k > 0) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += static_cast<T>(step_size * rng.normal());
    }
    Decoded d = model.greedy_decode(z, catalog, oracle, rng);
    if (seen.insert(dag::dag_key(d.dag)).second) {
      out.graph.merge(d.dag);
      out.dags.push_back(std::move(d));
      out.points.push_back(z);
      if (out.dags.size() == n) return out;
    }
  }
  throw Error("latent_walk: step budget exhausted after " + std::to_string(max_points) + " points");
}

}  // namespace synthdag::model
