#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "synthdag/chem/element.hpp"
#include "synthdag/core/error.hpp"

namespace synthdag::chem {

enum class BondOrder : std::uint8_t { single = 1, double_ = 2, triple = 3, aromatic = 4 };

// Integer contribution of a bond to an atom's valence; aromatic bonds count 1
// here and the aromatic pi contribution is added per atom.
constexpr int bond_valence(BondOrder o) {
  return o == BondOrder::aromatic ? 1 : static_cast<int>(o);
}

struct Atom {
  int element = 6;
  int formal_charge = 0;
  int hydrogens = 0;  // total attached hydrogens (implicit + bracket count)
  bool aromatic = false;
  int map_number = 0;  // reaction atom map, 0 when absent

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::single;

  bool operator==(const Bond&) const = default;
};

class MolError : public Error {
 public:
  using Error::Error;
};

// Attributed molecular graph. Construct through MolGraph::create (or the
// SMILES parser) to get the structural invariants checked.
class MolGraph {
 public:
  MolGraph() = default;

  static MolGraph create(std::vector<Atom> atoms, std::vector<Bond> bonds) {
    MolGraph g;
    g.atoms_ = std::move(atoms);
    g.bonds_ = std::move(bonds);
    g.build_adjacency();
    if (auto problem = g.structural_problem(); !problem.empty()) {
      throw MolError(problem);
    }
    return g;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  // (neighbor atom, bond index) pairs.
  const std::vector<std::pair<int, int>>& neighbors(int atom) const {
    return adjacency_[static_cast<std::size_t>(atom)];
  }

  int degree(int atom) const { return static_cast<int>(neighbors(atom).size()); }

  int heavy_degree(int atom) const {
    int d = 0;
    for (auto [nbr, bond] : neighbors(atom)) {
      (void)bond;
      if (atoms_[static_cast<std::size_t>(nbr)].element != 1) ++d;
    }
    return d;
  }

  std::size_t heavy_atom_count() const {
    return static_cast<std::size_t>(std::count_if(
        atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.element != 1; }));
  }

  std::size_t heavy_bond_count() const {
    return static_cast<std::size_t>(std::count_if(bonds_.begin(), bonds_.end(), [&](const Bond& b) {
      return atoms_[static_cast<std::size_t>(b.a)].element != 1 &&
             atoms_[static_cast<std::size_t>(b.b)].element != 1;
    }));
  }

  // Sum of integer bond contributions, plus one when the atom carries any
  // aromatic bond (its share of the delocalized system).
  int bond_valence_sum(int atom) const {
    int sum = 0;
    bool any_aromatic = false;
    for (auto [nbr, bond] : neighbors(atom)) {
      (void)nbr;
      const BondOrder o = bonds_[static_cast<std::size_t>(bond)].order;
      sum += bond_valence(o);
      any_aromatic = any_aromatic || o == BondOrder::aromatic;
    }
    return sum + (any_aromatic ? 1 : 0);
  }

  // Valence used for the per-element maximum check. Aromatic heteroatoms that
  // donate a lone pair (furan O, pyrrole N) are not charged the pi bond.
  int checked_valence(int atom) const {
    const Atom& a = atoms_[static_cast<std::size_t>(atom)];
    int sum = 0;
    for (auto [nbr, bond] : neighbors(atom)) {
      (void)nbr;
      sum += bond_valence(bonds_[static_cast<std::size_t>(bond)].order);
    }
    return sum + a.hydrogens;
  }

  // Empty string when valid; otherwise a description of the first problem.
  std::string valence_problem() const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& a = atoms_[i];
      const int v = checked_valence(static_cast<int>(i));
      const int max = max_valence(a.element, a.formal_charge);
      if (v > max) {
        return "valence " + std::to_string(v) + " exceeds " + std::to_string(max) +
               " on atom " + std::to_string(i) + " (" +
               std::string(element_symbol(a.element)) + ")";
      }
    }
    return {};
  }

  bool operator==(const MolGraph& other) const {
    return atoms_ == other.atoms_ && bonds_ == other.bonds_;
  }

 private:
  void build_adjacency() {
    adjacency_.assign(atoms_.size(), {});
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      const Bond& b = bonds_[i];
      if (b.a < 0 || b.b < 0 || static_cast<std::size_t>(b.a) >= atoms_.size() ||
          static_cast<std::size_t>(b.b) >= atoms_.size()) {
        throw MolError("bond endpoint out of range");
      }
      adjacency_[static_cast<std::size_t>(b.a)].emplace_back(b.b, static_cast<int>(i));
      adjacency_[static_cast<std::size_t>(b.b)].emplace_back(b.a, static_cast<int>(i));
    }
  }

  std::string structural_problem() const {
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      const Bond& b = bonds_[i];
      if (b.a == b.b) return "bond " + std::to_string(i) + " is a self loop";
      if (b.order == BondOrder::aromatic &&
          !(atoms_[static_cast<std::size_t>(b.a)].aromatic &&
            atoms_[static_cast<std::size_t>(b.b)].aromatic)) {
        return "aromatic bond " + std::to_string(i) + " between non-aromatic atoms";
      }
    }
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      auto nbrs = adjacency_[i];
      std::sort(nbrs.begin(), nbrs.end());
      for (std::size_t k = 1; k < nbrs.size(); ++k) {
        if (nbrs[k].first == nbrs[k - 1].first) {
          return "duplicate bond between atoms " + std::to_string(i) + " and " +
                 std::to_string(nbrs[k].first);
        }
      }
    }
    return {};
  }

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

// Atoms that lie on at least one cycle, via bridge detection.
inline std::vector<bool> ring_atoms(const MolGraph& g) {
  const int n = static_cast<int>(g.num_atoms());
  std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> bridge(g.num_bonds(), false);
  int timer = 0;
  // Iterative DFS: (atom, parent bond, next neighbor position).
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& nbrs = g.neighbors(f.atom);
      if (f.next < nbrs.size()) {
        auto [nbr, bond] = nbrs[f.next++];
        if (bond == f.parent_bond) continue;
        const auto un = static_cast<std::size_t>(nbr);
        if (disc[un] == -1) {
          disc[un] = low[un] = timer++;
          stack.push_back({nbr, bond, 0});
        } else {
          low[static_cast<std::size_t>(f.atom)] =
              std::min(low[static_cast<std::size_t>(f.atom)], disc[un]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const auto up = static_cast<std::size_t>(stack.back().atom);
          const auto ud = static_cast<std::size_t>(done.atom);
          low[up] = std::min(low[up], low[ud]);
          if (low[ud] > disc[up]) bridge[static_cast<std::size_t>(done.parent_bond)] = true;
        }
      }
    }
  }
  std::vector<bool> in_ring(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < g.num_bonds(); ++i) {
    if (!bridge[i]) {
      in_ring[static_cast<std::size_t>(g.bonds()[i].a)] = true;
      in_ring[static_cast<std::size_t>(g.bonds()[i].b)] = true;
    }
  }
  return in_ring;
}

// Atoms on a cycle of exactly `size` atoms (simple cycle search bounded by
// size; fine for the small rings this is used for).
inline bool has_ring_of_size(const MolGraph& g, int size) {
  const int n = static_cast<int>(g.num_atoms());
  if (size < 3) return false;
  std::vector<int> path;
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  bool found = false;
  auto dfs = [&](auto&& self, int start, int atom, int depth) -> void {
    if (found) return;
    for (auto [nbr, bond] : g.neighbors(atom)) {
      (void)bond;
      if (nbr == start && depth == size) {
        found = true;
        return;
      }
      if (nbr <= start || on_path[static_cast<std::size_t>(nbr)] || depth >= size) continue;
      on_path[static_cast<std::size_t>(nbr)] = true;
      self(self, start, nbr, depth + 1);
      on_path[static_cast<std::size_t>(nbr)] = false;
      if (found) return;
    }
  };
  for (int s = 0; s < n && !found; ++s) {
    on_path[static_cast<std::size_t>(s)] = true;
    dfs(dfs, s, s, 1);
    on_path[static_cast<std::size_t>(s)] = false;
  }
  return found;
}

}  // namespace synthdag::chem
