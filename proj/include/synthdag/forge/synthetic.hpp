#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "synthdag/chem/molecule.hpp"
#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"

namespace synthdag::forge {

// Chain fragments whose first and last written atoms are carbons with a free
// valence, so writing two of them end to end is again such a fragment.
inline const std::vector<std::string>& default_fragments() {
  static const std::vector<std::string> f = {
      "C",       "CC",       "CCC",       "COC",      "CNC",      "CSC",      "CC(C)C",
      "CC(=O)C", "CC(O)C",   "CC(N)C",    "CC(F)C",   "CC(Cl)C",  "CC(=O)OC", "CC(=O)NC",
      "Cc1ccc(C)cc1", "Cc1ccc(C)nc1", "CC(C#N)C", "CC(OC)C", "CC(Br)C", "CC=CC"};
  return f;
}

struct SyntheticOptions {
  int reactions = 50;
  int blocks = 12;           // taken from the front of the fragment list
  int max_reactants = 3;     // reactant count drawn from [2, max_reactants]
  int max_heavy_atoms = 24;
  double product_bias = 0.6; // chance each reactant slot prefers a product
  bool shuffle = true;       // permute lines so closure needs several passes
};

struct SyntheticCorpus {
  std::vector<std::string> blocks;     // written forms
  std::vector<std::string> reactions;  // "r1.r2>>p" lines
  std::vector<std::string> products;   // written forms, generation order
};

// Random reaction file over a joined-fragment chemistry. Every product is new
// (not a block, not an earlier product) and every reactant set is distinct,
// so each line contributes exactly one DAG.
inline SyntheticCorpus synthetic_reactions(const SyntheticOptions& o, std::uint64_t seed) {
  const auto& frags = default_fragments();
  if (o.blocks < 2 || o.blocks > static_cast<int>(frags.size())) throw ConfigError("synthetic: bad block count");
  if (o.max_reactants < 2 || o.reactions < 0) throw ConfigError("synthetic: bad options");
  SyntheticCorpus c;
  c.blocks.assign(frags.begin(), frags.begin() + o.blocks);
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> keys;
  for (const auto& b : c.blocks) seen.insert(chem::make_molecule(b)->smiles);

  Rng rng(seed);
  std::vector<std::string> lines;
  int attempts = 0;
  while (static_cast<int>(c.products.size()) < o.reactions) {
    if (++attempts > 1000 * (o.reactions + 1)) throw Error("synthetic: could not generate enough reactions");
    const int k = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(o.max_reactants - 1)));
    std::vector<std::string> picks;
    std::vector<std::string> canon;
    for (int i = 0; i < k; ++i) {
      const bool from_products = !c.products.empty() && rng.uniform() < o.product_bias;
      const auto& src = from_products ? c.products : c.blocks;
      picks.push_back(src[rng.index(src.size())]);
      canon.push_back(chem::make_molecule(picks.back())->smiles);
    }
    std::string key;
    std::sort(canon.begin(), canon.end());
    if (std::adjacent_find(canon.begin(), canon.end()) != canon.end()) continue;
    for (const auto& s : canon) key += s + ".";
    if (keys.count(key)) continue;
    std::string joined;
    std::string line;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      joined += picks[i];
      line += (i ? "." : "") + picks[i];
    }
    const chem::MolPtr product = chem::make_molecule(joined);
    if (static_cast<int>(product->graph.num_atoms()) > o.max_heavy_atoms) continue;
    if (!seen.insert(product->smiles).second) continue;
    keys.insert(key);
    c.products.push_back(joined);
    lines.push_back(line + ">>" + joined);
  }
  if (o.shuffle) rng.shuffle(lines);
  c.reactions = std::move(lines);
  return c;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace synthdag::forge
