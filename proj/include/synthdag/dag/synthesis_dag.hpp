#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "synthdag/chem/molecule.hpp"

namespace synthdag::dag {

using chem::MolPtr;

enum class NodeKind { building_block, product };

inline const char* to_string(NodeKind k) {
  return k == NodeKind::building_block ? "building_block" : "product";
}

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::building_block;
  MolPtr mol;
};

using Edge = std::pair<int, int>;  // reactant -> product

// Node ids equal their index in `nodes`.
struct SynthesisDAG {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int final_id = -1;

  std::size_t size() const { return nodes.size(); }
  const Node& final_node() const { return nodes.at(static_cast<std::size_t>(final_id)); }

  // Reactant ids of each node, ordered by id.
  std::vector<std::vector<int>> parents() const {
    std::vector<std::vector<int>> p(nodes.size());
    for (auto [s, d] : edges) p[static_cast<std::size_t>(d)].push_back(s);
    for (auto& v : p) std::sort(v.begin(), v.end());
    return p;
  }

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> c(nodes.size());
    for (auto [s, d] : edges) c[static_cast<std::size_t>(s)].push_back(d);
    for (auto& v : c) std::sort(v.begin(), v.end());
    return c;
  }

  int find(const std::string& smiles) const {
    for (const Node& n : nodes) {
      if (n.mol && n.mol->smiles == smiles) return n.id;
    }
    return -1;
  }

  std::size_t num_products() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) {
      return n.kind == NodeKind::product;
    }));
  }
};

struct Violation {
  std::string what;
  int node = -1;
  Edge edge{-1, -1};
};

inline std::vector<Violation> validate(const SynthesisDAG& d) {
  std::vector<Violation> out;
  const int n = static_cast<int>(d.nodes.size());
  if (n == 0) {
    out.push_back({"empty dag"});
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const Node& node = d.nodes[static_cast<std::size_t>(i)];
    if (node.id != i) out.push_back({"node id does not match position", i});
    if (!node.mol) out.push_back({"missing molecule", i});
  }
  if (d.final_id < 0 || d.final_id >= n) {
    out.push_back({"final id out of range", d.final_id});
    return out;
  }

  std::set<Edge> seen_edges;
  std::vector<int> indeg(static_cast<std::size_t>(n), 0), outdeg(static_cast<std::size_t>(n), 0);
  bool edges_ok = true;
  for (const Edge& e : d.edges) {
    if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n) {
      out.push_back({"edge endpoint out of range", -1, e});
      edges_ok = false;
      continue;
    }
    if (e.first == e.second) out.push_back({"self loop", e.first, e});
    if (!seen_edges.insert(e).second) out.push_back({"duplicate edge", -1, e});
    ++indeg[static_cast<std::size_t>(e.second)];
    ++outdeg[static_cast<std::size_t>(e.first)];
  }

  std::map<std::string, int> by_smiles;
  for (const Node& node : d.nodes) {
    if (!node.mol) continue;
    auto [it, fresh] = by_smiles.emplace(node.mol->smiles, node.id);
    if (!fresh) out.push_back({"duplicate molecule " + node.mol->smiles, node.id});
  }

  if (edges_ok) {
    // Kahn's algorithm; anything left over sits on a cycle.
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
    for (auto [s, t] : d.edges) succ[static_cast<std::size_t>(s)].push_back(t);
    std::vector<int> deg = indeg;
    std::queue<int> q;
    for (int i = 0; i < n; ++i) {
      if (deg[static_cast<std::size_t>(i)] == 0) q.push(i);
    }
    int visited = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      ++visited;
      for (int v : succ[static_cast<std::size_t>(u)]) {
        if (--deg[static_cast<std::size_t>(v)] == 0) q.push(v);
      }
    }
    if (visited != n) {
      for (int i = 0; i < n; ++i) {
        if (deg[static_cast<std::size_t>(i)] > 0) out.push_back({"cycle", i});
      }
    }
  }

  const Node& fin = d.nodes[static_cast<std::size_t>(d.final_id)];
  const bool degenerate = n == 1 && d.edges.empty();
  if (fin.kind != NodeKind::product && !degenerate) {
    out.push_back({"final node is not a product", d.final_id});
  }
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const Node& node = d.nodes[si];
    if (outdeg[si] == 0 && i != d.final_id) out.push_back({"extra sink node", i});
    if (i == d.final_id && outdeg[si] != 0) out.push_back({"final node has outgoing edges", i});
    if (node.kind == NodeKind::building_block && indeg[si] != 0) {
      out.push_back({"building block with incoming edges", i});
    }
    if (node.kind == NodeKind::product && indeg[si] == 0) {
      out.push_back({"product without reactants", i});
    }
  }
  return out;
}

inline bool is_valid(const SynthesisDAG& d) { return validate(d).empty(); }

// Id-independent identity: final molecule, building blocks, and every
// reaction as product <- sorted reactants. Two DAGs are equal iff keys match.
inline std::string dag_key(const SynthesisDAG& d) {
  const auto par = d.parents();
  std::vector<std::string> blocks;
  std::vector<std::string> reactions;
  for (const Node& node : d.nodes) {
    if (node.kind == NodeKind::building_block) {
      blocks.push_back(node.mol->smiles);
      continue;
    }
    std::vector<std::string> rs;
    for (int p : par[static_cast<std::size_t>(node.id)]) {
      rs.push_back(d.nodes[static_cast<std::size_t>(p)].mol->smiles);
    }
    std::sort(rs.begin(), rs.end());
    std::string r = node.mol->smiles + "<";
    for (std::size_t i = 0; i < rs.size(); ++i) r += (i ? "+" : "") + rs[i];
    reactions.push_back(std::move(r));
  }
  std::sort(blocks.begin(), blocks.end());
  std::sort(reactions.begin(), reactions.end());
  std::string key = d.final_node().mol->smiles + "|";
  for (const auto& b : blocks) key += b + ",";
  key += "|";
  for (const auto& r : reactions) key += r + ";";
  return key;
}

inline bool same_dag(const SynthesisDAG& a, const SynthesisDAG& b) { return dag_key(a) == dag_key(b); }

// Shortest-path distance (in edges) from every node to the final node;
// -1 for nodes that cannot reach it.
inline std::vector<int> distance_to_final(const SynthesisDAG& d) {
  const auto par = d.parents();
  std::vector<int> dist(d.nodes.size(), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(d.final_id)] = 0;
  q.push(d.final_id);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int p : par[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(p)] < 0) {
        dist[static_cast<std::size_t>(p)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push(p);
      }
    }
  }
  return dist;
}

}  // namespace synthdag::dag
