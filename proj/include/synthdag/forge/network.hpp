#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/dag/catalog.hpp"
#include "synthdag/dag/synthesis_dag.hpp"
#include "synthdag/forge/reactions.hpp"
#include "synthdag/oracle/lookup.hpp"

namespace synthdag::forge {

struct NetMolecule {
  chem::MolPtr mol;
  bool building_block = false;
};

struct NetReaction {
  std::vector<int> reactants;  // molecule ids, distinct, in record order
  int product = -1;
  std::size_t line = 0;
};

// Molecules and reactions in insertion order. Building blocks come first.
struct ReactionNetwork {
  std::vector<NetMolecule> molecules;
  std::vector<NetReaction> reactions;
  std::unordered_map<std::string, int> index;
  std::size_t skipped_conflicts = 0;  // reactant sets already mapped to another product

  int find(const std::string& smiles) const {
    auto it = index.find(smiles);
    return it == index.end() ? -1 : it->second;
  }

  int add(const chem::MolPtr& m, bool block) {
    auto [it, fresh] = index.emplace(m->smiles, static_cast<int>(molecules.size()));
    if (fresh) molecules.push_back({m, block});
    return it->second;
  }

  std::vector<std::string> reactant_smiles(const NetReaction& r) const {
    std::vector<std::string> out;
    for (int i : r.reactants) out.push_back(molecules[static_cast<std::size_t>(i)].mol->smiles);
    return out;
  }
};

// Fixed-point closure: passes over the remaining records in file order admit
// a reaction once all its reactants are in the network and its product is
// not a building block, until a pass admits nothing. A reaction whose
// reactant set already produces a different molecule is skipped, so the
// network stays a function of reactant sets (what a lookup oracle needs).
inline ReactionNetwork build_network(const std::vector<ReactionRecord>& records, const dag::Catalog& blocks) {
  ReactionNetwork net;
  for (const auto& b : blocks.blocks()) net.add(b, true);
  if (blocks.empty()) return net;
  std::unordered_map<std::string, std::string> by_key;
  std::vector<bool> done(records.size(), false);
  bool added = true;
  while (added) {
    added = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (done[i]) continue;
      const ReactionRecord& r = records[i];
      if (r.products.size() != 1) {
        done[i] = true;
        continue;
      }
      const chem::MolPtr& product = r.products[0].mol;
      const int pid = net.find(product->smiles);
      if (pid >= 0 && net.molecules[static_cast<std::size_t>(pid)].building_block) {
        done[i] = true;
        continue;
      }
      std::vector<int> ids;
      bool ready = true;
      for (const auto& m : r.reactants) {
        const int id = net.find(m.mol->smiles);
        if (id < 0) {
          ready = false;
          break;
        }
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      if (!ready) continue;
      done[i] = true;
      if (std::find_if(r.reactants.begin(), r.reactants.end(),
                       [&](const RecordMol& m) { return m.mol->smiles == product->smiles; }) != r.reactants.end()) {
        continue;
      }
      std::vector<std::string> names;
      for (int id : ids) names.push_back(net.molecules[static_cast<std::size_t>(id)].mol->smiles);
      const std::string key = oracle::reactant_key(names);
      if (auto it = by_key.find(key); it != by_key.end()) {
        if (it->second != product->smiles) ++net.skipped_conflicts;
        continue;
      }
      by_key.emplace(key, product->smiles);
      const int p = net.add(product, false);
      net.reactions.push_back({std::move(ids), p, r.line});
      added = true;
    }
  }
  return net;
}

// Records of the admitted reactions, for re-running the closure.
inline std::vector<ReactionRecord> network_records(const ReactionNetwork& net) {
  std::vector<ReactionRecord> out;
  for (const auto& r : net.reactions) {
    ReactionRecord rec;
    rec.line = r.line;
    for (int i : r.reactants) {
      const auto& m = net.molecules[static_cast<std::size_t>(i)].mol;
      rec.reactants.push_back({m->graph, m});
    }
    const auto& p = net.molecules[static_cast<std::size_t>(r.product)].mol;
    rec.products.push_back({p->graph, p});
    out.push_back(std::move(rec));
  }
  return out;
}

inline oracle::ReactionTable network_table(const ReactionNetwork& net) {
  std::vector<oracle::TableEntry> entries;
  for (const auto& r : net.reactions) {
    entries.push_back({net.reactant_smiles(r), net.molecules[static_cast<std::size_t>(r.product)].mol->smiles});
  }
  return oracle::build_table(entries);
}

// Route to one molecule following, for every product, its first-inserted
// producing reaction. Nodes are ordered by network insertion, which is
// topological because a reaction is only admitted after its reactants.
inline dag::SynthesisDAG route_dag(const ReactionNetwork& net, int target, const std::vector<int>& producer) {
  std::vector<bool> in(net.molecules.size(), false);
  std::vector<int> stack = {target};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (in[static_cast<std::size_t>(u)]) continue;
    in[static_cast<std::size_t>(u)] = true;
    if (net.molecules[static_cast<std::size_t>(u)].building_block) continue;
    for (int r : net.reactions[static_cast<std::size_t>(producer[static_cast<std::size_t>(u)])].reactants) stack.push_back(r);
  }
  dag::SynthesisDAG d;
  std::vector<int> node_of(net.molecules.size(), -1);
  for (std::size_t i = 0; i < net.molecules.size(); ++i) {
    if (!in[i]) continue;
    node_of[i] = static_cast<int>(d.nodes.size());
    d.nodes.push_back({node_of[i], net.molecules[i].building_block ? dag::NodeKind::building_block : dag::NodeKind::product,
                       net.molecules[i].mol});
  }
  for (std::size_t i = 0; i < net.molecules.size(); ++i) {
    if (!in[i] || net.molecules[i].building_block) continue;
    for (int r : net.reactions[static_cast<std::size_t>(producer[i])].reactants) {
      d.edges.emplace_back(node_of[static_cast<std::size_t>(r)], node_of[i]);
    }
  }
  std::sort(d.edges.begin(), d.edges.end());
  d.final_id = node_of[static_cast<std::size_t>(target)];
  return d;
}

inline std::vector<int> first_producers(const ReactionNetwork& net) {
  std::vector<int> producer(net.molecules.size(), -1);
  for (std::size_t r = 0; r < net.reactions.size(); ++r) {
    int& p = producer[static_cast<std::size_t>(net.reactions[r].product)];
    if (p < 0) p = static_cast<int>(r);
  }
  return producer;
}

// One DAG per non-building-block molecule, in insertion order.
inline std::vector<dag::SynthesisDAG> extract_dags(const ReactionNetwork& net) {
  const std::vector<int> producer = first_producers(net);
  std::vector<dag::SynthesisDAG> out;
  for (std::size_t i = 0; i < net.molecules.size(); ++i) {
    if (net.molecules[i].building_block) continue;
    out.push_back(route_dag(net, static_cast<int>(i), producer));
    if (const auto v = dag::validate(out.back()); !v.empty()) {
      throw Error("extract_dags: route to " + net.molecules[i].mol->smiles + " is invalid: " + v.front().what);
    }
  }
  return out;
}

}  // namespace synthdag::forge
