#pragma once

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/dag/action.hpp"
#include "synthdag/dag/synthesis_dag.hpp"

namespace synthdag::dag {

using json = nlohmann::json;

inline json to_json(const SynthesisDAG& d) {
  json nodes = json::array();
  for (const Node& n : d.nodes) {
    nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"smiles", n.mol->smiles}});
  }
  json edges = json::array();
  for (auto [s, t] : d.edges) edges.push_back({s, t});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"final", d.final_id}};
}

// Node ids in the document may be arbitrary integers; they are renumbered by
// position.
inline SynthesisDAG dag_from_json(const json& j) {
  SynthesisDAG d;
  std::unordered_map<int, int> remap;
  for (const auto& n : j.at("nodes")) {
    const int idx = static_cast<int>(d.nodes.size());
    const int id = n.at("id").get<int>();
    if (!remap.emplace(id, idx).second) throw Error("dag json: duplicate node id " + std::to_string(id));
    const std::string kind = n.at("kind").get<std::string>();
    NodeKind k;
    if (kind == "building_block") {
      k = NodeKind::building_block;
    } else if (kind == "product") {
      k = NodeKind::product;
    } else {
      throw Error("dag json: unknown node kind '" + kind + "'");
    }
    d.nodes.push_back({idx, k, chem::make_molecule(n.at("smiles").get<std::string>())});
  }
  auto lookup = [&](int id) {
    auto it = remap.find(id);
    if (it == remap.end()) throw Error("dag json: unknown node id " + std::to_string(id));
    return it->second;
  };
  for (const auto& e : j.at("edges")) d.edges.emplace_back(lookup(e.at(0).get<int>()), lookup(e.at(1).get<int>()));
  d.final_id = lookup(j.at("final").get<int>());
  return d;
}

inline std::string to_json_line(const SynthesisDAG& d) { return to_json(d).dump(); }

inline SynthesisDAG dag_from_json_line(const std::string& line) { return dag_from_json(json::parse(line)); }

inline void write_jsonl(const std::string& path, const std::vector<SynthesisDAG>& dags) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& d : dags) out << to_json_line(d) << '\n';
}

inline std::vector<SynthesisDAG> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<SynthesisDAG> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(dag_from_json_line(line));
    } catch (const std::exception& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_action_seqs(const std::string& path, const std::vector<ActionSeq>& seqs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : seqs) out << to_text(s) << '\n';
}

inline std::vector<ActionSeq> read_action_seqs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ActionSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_action_seq(line));
  }
  return out;
}

}  // namespace synthdag::dag
