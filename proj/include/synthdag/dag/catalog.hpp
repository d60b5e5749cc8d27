#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/chem/molecule.hpp"
#include "synthdag/chem/smi_io.hpp"

namespace synthdag::dag {

// Building-block catalog. Entries are unique by canonical SMILES and keep
// first-seen order.
class Catalog {
 public:
  Catalog() = default;

  explicit Catalog(const std::vector<chem::MolPtr>& mols) {
    for (const auto& m : mols) add(m);
  }

  static Catalog from_smiles(const std::vector<std::string>& smiles) {
    Catalog c;
    for (const auto& s : smiles) c.add(chem::make_molecule(s));
    return c;
  }

  static Catalog load(const std::string& path) { return from_smiles(chem::read_smi(path)); }

  // Returns the index of the (possibly pre-existing) entry.
  int add(const chem::MolPtr& m) {
    auto [it, fresh] = index_.emplace(m->smiles, static_cast<int>(blocks_.size()));
    if (fresh) blocks_.push_back(m);
    return it->second;
  }

  int find(const std::string& smiles) const {
    auto it = index_.find(smiles);
    return it == index_.end() ? -1 : it->second;
  }

  bool contains(const std::string& smiles) const { return index_.count(smiles) != 0; }

  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const chem::MolPtr& operator[](std::size_t i) const { return blocks_[i]; }
  const std::vector<chem::MolPtr>& blocks() const { return blocks_; }

 private:
  std::vector<chem::MolPtr> blocks_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace synthdag::dag
