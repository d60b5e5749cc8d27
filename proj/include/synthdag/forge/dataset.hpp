#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/dag/io.hpp"
#include "synthdag/forge/network.hpp"
#include "synthdag/forge/split.hpp"

namespace synthdag::forge {

// Lookup-oracle table from a reactions file: single-product records, reagents
// filtered, first entry per reactant key.
inline oracle::ReactionTable table_from_records(const std::vector<ReactionRecord>& records) {
  std::vector<oracle::TableEntry> entries;
  for (const auto& r : records) {
    if (r.products.size() != 1) continue;
    oracle::TableEntry e;
    for (const auto& m : r.reactants) e.reactants.push_back(m.mol->smiles);
    e.product = r.products[0].mol->smiles;
    entries.push_back(std::move(e));
  }
  return oracle::build_table(entries);
}

inline oracle::ReactionTable load_reaction_table(const std::string& path) {
  return table_from_records(filter_reactions(parse_reactions(path).records));
}

struct DatasetSummary {
  std::size_t lines_parsed = 0;
  std::size_t rejected = 0;
  std::size_t kept_after_filter = 0;
  std::size_t reactions_admitted = 0;
  std::size_t molecules = 0;
  std::size_t skipped_conflicts = 0;
  std::size_t dags = 0;

  nlohmann::json to_json() const {
    return {{"records", lines_parsed},         {"rejected", rejected}, {"kept_after_filter", kept_after_filter},
            {"reactions_admitted", reactions_admitted}, {"molecules", molecules},
            {"skipped_conflicts", skipped_conflicts},   {"dags", dags}};
  }
};

struct Dataset {
  ReactionNetwork network;
  std::vector<dag::SynthesisDAG> dags;
  std::vector<Reject> rejects;
  DatasetSummary summary;
};

inline Dataset build_dataset(const std::string& reactions_path, const dag::Catalog& blocks) {
  ParsedReactions parsed = parse_reactions(reactions_path);
  Dataset d;
  d.summary.lines_parsed = parsed.records.size();
  d.summary.rejected = parsed.rejects.size();
  d.rejects = std::move(parsed.rejects);
  const auto kept = filter_reactions(std::move(parsed.records));
  d.summary.kept_after_filter = kept.size();
  d.network = build_network(kept, blocks);
  d.dags = extract_dags(d.network);
  d.summary.reactions_admitted = d.network.reactions.size();
  d.summary.molecules = d.network.molecules.size();
  d.summary.skipped_conflicts = d.network.skipped_conflicts;
  d.summary.dags = d.dags.size();
  return d;
}

// dags.jsonl, {train,valid,test}.jsonl, split.json, rejects.tsv and the
// admitted reactions (network_reactions.txt, usable as a lookup table).
inline void write_dataset(const std::string& dir, const Dataset& d, const Split& s) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p(dir);
  dag::write_jsonl((p / "dags.jsonl").string(), d.dags);
  dag::write_jsonl((p / "train.jsonl").string(), s.train);
  dag::write_jsonl((p / "valid.jsonl").string(), s.valid);
  dag::write_jsonl((p / "test.jsonl").string(), s.test);
  {
    std::ofstream out(p / "split.json");
    if (!out) throw IoError("cannot write split.json");
    out << split_manifest(s).dump(2) << '\n';
  }
  write_rejects((p / "rejects.tsv").string(), d.rejects);
  std::ofstream out(p / "network_reactions.txt");
  if (!out) throw IoError("cannot write network_reactions.txt");
  for (const auto& r : d.network.reactions) {
    const auto names = d.network.reactant_smiles(r);
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "." : "") << names[i];
    out << ">>" << d.network.molecules[static_cast<std::size_t>(r.product)].mol->smiles << '\n';
  }
}

}  // namespace synthdag::forge
