#pragma once

#include <sstream>

#include "synthdag/forge/network.hpp"
#include "synthdag/forge/synthetic.hpp"

namespace synthdag::testing {

struct SyntheticWorld {
  forge::SyntheticCorpus corpus;
  dag::Catalog catalog;
  forge::ReactionNetwork network;
  std::vector<dag::SynthesisDAG> dags;
};

inline SyntheticWorld synthetic_world(const forge::SyntheticOptions& o, std::uint64_t seed) {
  SyntheticWorld w;
  w.corpus = forge::synthetic_reactions(o, seed);
  std::string text;
  for (const auto& l : w.corpus.reactions) text += l + "\n";
  std::istringstream in(text);
  auto parsed = forge::parse_reactions_stream(in);
  w.catalog = dag::Catalog::from_smiles(w.corpus.blocks);
  w.network = forge::build_network(forge::filter_reactions(std::move(parsed.records)), w.catalog);
  w.dags = forge::extract_dags(w.network);
  return w;
}

}  // namespace synthdag::testing
