#pragma once

#include <algorithm>
#include <queue>
#include <unordered_map>
#include <vector>

#include "synthdag/core/error.hpp"
#include "synthdag/dag/synthesis_dag.hpp"

namespace synthdag::dag {

// One creation event as it happened during decoding. Events with no
// reactants create building blocks. Later events may recreate an existing
// molecule, which is what introduces loops.
struct RawEvent {
  MolPtr mol;
  std::vector<MolPtr> reactants;
};

struct RawGraph {
  std::vector<RawEvent> events;
  MolPtr final_mol;
};

// Keeps the first event that produced each molecule and drops later
// re-creations (and with them any loop edges), then prunes nodes that do not
// lead to the final molecule. Ids follow creation order.
inline SynthesisDAG remove_loops(const RawGraph& raw) {
  if (!raw.final_mol) throw Error("remove_loops: no final molecule");
  std::unordered_map<std::string, int> index;
  std::vector<MolPtr> mols;
  std::vector<std::vector<int>> parents;
  for (const RawEvent& ev : raw.events) {
    if (index.count(ev.mol->smiles)) continue;
    std::vector<int> ps;
    for (const auto& r : ev.reactants) {
      auto it = index.find(r->smiles);
      if (it == index.end()) throw Error("remove_loops: reactant " + r->smiles + " used before creation");
      ps.push_back(it->second);
    }
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    index.emplace(ev.mol->smiles, static_cast<int>(mols.size()));
    mols.push_back(ev.mol);
    parents.push_back(std::move(ps));
  }
  auto fit = index.find(raw.final_mol->smiles);
  if (fit == index.end()) throw Error("remove_loops: final molecule was never created");

  std::vector<bool> keep(mols.size(), false);
  std::queue<int> q;
  keep[static_cast<std::size_t>(fit->second)] = true;
  q.push(fit->second);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int p : parents[static_cast<std::size_t>(u)]) {
      if (!keep[static_cast<std::size_t>(p)]) {
        keep[static_cast<std::size_t>(p)] = true;
        q.push(p);
      }
    }
  }

  SynthesisDAG d;
  std::vector<int> new_id(mols.size(), -1);
  for (std::size_t i = 0; i < mols.size(); ++i) {
    if (!keep[i]) continue;
    new_id[i] = static_cast<int>(d.nodes.size());
    d.nodes.push_back({new_id[i], parents[i].empty() ? NodeKind::building_block : NodeKind::product, mols[i]});
  }
  for (std::size_t i = 0; i < mols.size(); ++i) {
    if (!keep[i]) continue;
    for (int p : parents[i]) d.edges.emplace_back(new_id[static_cast<std::size_t>(p)], new_id[i]);
  }
  d.final_id = new_id[static_cast<std::size_t>(fit->second)];
  return d;
}

// Events of a valid DAG in a topological order (smallest id first among
// ready nodes).
inline RawGraph to_raw(const SynthesisDAG& d) {
  const auto par = d.parents();
  const auto kids = d.children();
  std::vector<int> deg(d.nodes.size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    deg[i] = static_cast<int>(par[i].size());
    if (deg[i] == 0) ready.push(static_cast<int>(i));
  }
  RawGraph raw;
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    RawEvent ev{d.nodes[static_cast<std::size_t>(u)].mol, {}};
    for (int p : par[static_cast<std::size_t>(u)]) ev.reactants.push_back(d.nodes[static_cast<std::size_t>(p)].mol);
    raw.events.push_back(std::move(ev));
    for (int k : kids[static_cast<std::size_t>(u)]) {
      if (--deg[static_cast<std::size_t>(k)] == 0) ready.push(k);
    }
  }
  if (raw.events.size() != d.nodes.size()) throw Error("to_raw: graph has a cycle");
  raw.final_mol = d.final_node().mol;
  return raw;
}

}  // namespace synthdag::dag
