#pragma once

#include <vector>

#include "synthdag/dag/serialize.hpp"

namespace synthdag::dag {

struct DagStats {
  std::size_t count = 0;
  double mean_nodes = 0;
  double mean_heavy_atoms = 0;  // of the final molecule
  double mean_bonds = 0;        // heavy-atom bonds of the final molecule
  double mean_actions = 0;      // length of one serialization
};

inline DagStats dag_stats(const std::vector<SynthesisDAG>& corpus, Rng& rng) {
  if (corpus.empty()) throw Error("dag_stats: empty corpus");
  DagStats s;
  s.count = corpus.size();
  for (const auto& d : corpus) {
    const auto& g = d.final_node().mol->graph;
    s.mean_nodes += static_cast<double>(d.size());
    s.mean_heavy_atoms += static_cast<double>(g.heavy_atom_count());
    s.mean_bonds += static_cast<double>(g.heavy_bond_count());
    s.mean_actions += static_cast<double>(serialize(d, rng).size());
  }
  const auto n = static_cast<double>(corpus.size());
  s.mean_nodes /= n;
  s.mean_heavy_atoms /= n;
  s.mean_bonds /= n;
  s.mean_actions /= n;
  return s;
}

}  // namespace synthdag::dag
