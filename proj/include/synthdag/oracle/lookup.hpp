#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/oracle/oracle.hpp"

namespace synthdag::oracle {

struct TableEntry {
  std::vector<std::string> reactants;  // canonical SMILES
  std::string product;                 // canonical SMILES
};

// Reactant key -> product canonical SMILES.
struct ReactionTable {
  std::unordered_map<std::string, std::string> products;
  std::size_t duplicate_warnings = 0;

  std::size_t size() const { return products.size(); }
  const std::string* find(const std::string& key) const {
    auto it = products.find(key);
    return it == products.end() ? nullptr : &it->second;
  }
};

// First entry for a key wins. Later entries with the same key and a
// different product count as a warning; exact repeats are ignored silently.
inline ReactionTable build_table(const std::vector<TableEntry>& entries) {
  ReactionTable t;
  for (const auto& e : entries) {
    auto [it, fresh] = t.products.emplace(reactant_key(e.reactants), e.product);
    if (!fresh && it->second != e.product) ++t.duplicate_warnings;
  }
  return t;
}

class LookupOracle : public ReactionOracle {
 public:
  explicit LookupOracle(ReactionTable table) : table_(std::move(table)) {}

  MolPtr predict(std::span<const MolPtr> reactants, Rng& rng) override {
    if (reactants.empty()) throw Error("oracle: empty reactant set");
    if (const std::string* p = table_.find(reactant_key(reactants))) return molecule(*p);
    return fallback_product(reactants, rng);
  }

  bool deterministic() const override { return false; }

  const ReactionTable& table() const { return table_; }

 private:
  MolPtr molecule(const std::string& smiles) {
    std::lock_guard lock(mu_);
    auto it = parsed_.find(smiles);
    if (it == parsed_.end()) it = parsed_.emplace(smiles, chem::make_molecule(smiles)).first;
    return it->second;
  }

  ReactionTable table_;
  std::mutex mu_;
  std::unordered_map<std::string, MolPtr> parsed_;
};

}  // namespace synthdag::oracle
