#pragma once

#include <algorithm>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/chem/molecule.hpp"
#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"

namespace synthdag::oracle {

using chem::MolPtr;

// Normalized reactant key: sorted, deduplicated canonical strings joined by '.'.
inline std::string reactant_key(std::vector<std::string> smiles) {
  std::sort(smiles.begin(), smiles.end());
  smiles.erase(std::unique(smiles.begin(), smiles.end()), smiles.end());
  std::string key;
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    if (i) key += '.';
    key += smiles[i];
  }
  return key;
}

inline std::string reactant_key(std::span<const MolPtr> reactants) {
  std::vector<std::string> smiles;
  smiles.reserve(reactants.size());
  for (const auto& m : reactants) smiles.push_back(m->smiles);
  return reactant_key(std::move(smiles));
}

// When no valid product is available, one of the reactants is returned at
// random.
inline MolPtr fallback_product(std::span<const MolPtr> reactants, Rng& rng) {
  if (reactants.empty()) throw Error("oracle: empty reactant set");
  return reactants[rng.index(reactants.size())];
}

class ReactionOracle {
 public:
  virtual ~ReactionOracle() = default;

  // Single major product of the reactant set. Never null.
  virtual MolPtr predict(std::span<const MolPtr> reactants, Rng& rng) = 0;

  // True when the result depends only on the reactant set.
  virtual bool deterministic() const = 0;
  virtual bool remote() const { return false; }
};

// Memoizes another oracle per reactant key, making it deterministic for the
// lifetime of the wrapper (the first answer for a key sticks).
class MemoOracle : public ReactionOracle {
 public:
  explicit MemoOracle(ReactionOracle& inner) : inner_(inner) {}

  MolPtr predict(std::span<const MolPtr> reactants, Rng& rng) override {
    const std::string key = reactant_key(reactants);
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    MolPtr product = inner_.predict(reactants, rng);
    std::lock_guard lock(mu_);
    return memo_.emplace(key, std::move(product)).first->second;
  }

  bool deterministic() const override { return true; }
  bool remote() const override { return inner_.remote(); }

 private:
  ReactionOracle& inner_;
  std::mutex mu_;
  std::unordered_map<std::string, MolPtr> memo_;
};

}  // namespace synthdag::oracle
