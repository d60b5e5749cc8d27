#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "synthdag/chem/canonical.hpp"
#include "synthdag/chem/smiles.hpp"

namespace synthdag::chem {

// A molecular graph paired with its canonical SMILES, which serves as the
// molecule's identity everywhere above the chemistry layer.
struct Molecule {
  MolGraph graph;
  std::string smiles;
};

using MolPtr = std::shared_ptr<const Molecule>;

inline MolPtr make_molecule(MolGraph g) {
  g = strip_atom_maps(g);
  std::string smi = canonical_smiles(g);
  return std::make_shared<const Molecule>(Molecule{std::move(g), std::move(smi)});
}

inline MolPtr make_molecule(std::string_view smiles) {
  return make_molecule(parse_smiles(smiles));
}

}  // namespace synthdag::chem
