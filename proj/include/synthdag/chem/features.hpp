#pragma once

#include <vector>

#include "synthdag/chem/element.hpp"
#include "synthdag/chem/mol_graph.hpp"

namespace synthdag::chem {

enum class Hybridization { none, sp, sp2, sp3 };

// Layout of one atom-feature row.
struct AtomFeatureLayout {
  static constexpr int element_slots = static_cast<int>(kFeatureElements.size()) + 1;  // + other
  static constexpr int atomic_number = element_slots;
  static constexpr int acceptor = atomic_number + 1;
  static constexpr int donor = acceptor + 1;
  static constexpr int sp = donor + 1;
  static constexpr int sp2 = sp + 1;
  static constexpr int sp3 = sp2 + 1;
  static constexpr int aromatic = sp3 + 1;
  static constexpr int hydrogens = aromatic + 1;
  static constexpr int dim = hydrogens + 1;
};

inline constexpr int kAtomFeatureDim = AtomFeatureLayout::dim;

inline Hybridization hybridization(const MolGraph& g, int atom) {
  const Atom& a = g.atoms()[static_cast<std::size_t>(atom)];
  if (a.element == 1) return Hybridization::none;
  if (g.degree(atom) == 0 && a.hydrogens == 0) return Hybridization::none;
  if (a.aromatic) return Hybridization::sp2;
  int doubles = 0;
  int triples = 0;
  for (auto [nbr, bond] : g.neighbors(atom)) {
    (void)nbr;
    const BondOrder o = g.bonds()[static_cast<std::size_t>(bond)].order;
    doubles += o == BondOrder::double_;
    triples += o == BondOrder::triple;
  }
  if (triples > 0 || doubles > 1) return Hybridization::sp;
  if (doubles == 1) return Hybridization::sp2;
  return Hybridization::sp3;
}

// N/O carrying at least one hydrogen.
inline bool is_donor(const Atom& a) {
  return (a.element == 7 || a.element == 8) && a.hydrogens > 0;
}

// N/O with an available lone pair and no positive charge. Pyrrole-type
// aromatic nitrogens (three connections) have their pair in the ring.
inline bool is_acceptor(const MolGraph& g, int atom) {
  const Atom& a = g.atoms()[static_cast<std::size_t>(atom)];
  if (a.element != 7 && a.element != 8) return false;
  if (a.formal_charge > 0) return false;
  if (a.element == 7 && a.aromatic && g.degree(atom) + a.hydrogens >= 3) return false;
  return true;
}

// Row-major num_atoms x kAtomFeatureDim matrix.
inline std::vector<float> atom_features(const MolGraph& g) {
  using L = AtomFeatureLayout;
  std::vector<float> out(g.num_atoms() * L::dim, 0.0F);
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    const Atom& a = g.atoms()[i];
    const int atom = static_cast<int>(i);
    float* row = out.data() + i * L::dim;
    row[feature_element_slot(a.element)] = 1.0F;
    row[L::atomic_number] = static_cast<float>(a.element);
    row[L::acceptor] = is_acceptor(g, atom) ? 1.0F : 0.0F;
    row[L::donor] = is_donor(a) ? 1.0F : 0.0F;
    switch (hybridization(g, atom)) {
      case Hybridization::sp: row[L::sp] = 1.0F; break;
      case Hybridization::sp2: row[L::sp2] = 1.0F; break;
      case Hybridization::sp3: row[L::sp3] = 1.0F; break;
      case Hybridization::none: break;
    }
    row[L::aromatic] = a.aromatic ? 1.0F : 0.0F;
    row[L::hydrogens] = static_cast<float>(a.hydrogens);
  }
  return out;
}

}  // namespace synthdag::chem
