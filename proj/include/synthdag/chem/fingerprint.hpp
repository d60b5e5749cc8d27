#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synthdag/chem/mol_graph.hpp"
#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"

namespace synthdag::chem {

class Fingerprint {
 public:
  Fingerprint() : Fingerprint(2048) {}
  explicit Fingerprint(std::size_t width, int radius = 2) : width_(width), radius_(radius) {
    if (width == 0 || !std::has_single_bit(width)) {
      throw Error("fingerprint width must be a power of two, got " + std::to_string(width));
    }
    words_.assign((width + 63) / 64, 0);
  }

  std::size_t width() const { return width_; }
  int radius() const { return radius_; }

  void set(std::size_t bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1U; }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::vector<std::size_t> on_bits() const {
    std::vector<std::size_t> bits;
    for (std::size_t i = 0; i < width_; ++i) {
      if (test(i)) bits.push_back(i);
    }
    return bits;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  bool operator==(const Fingerprint& o) const { return width_ == o.width_ && words_ == o.words_; }

 private:
  std::size_t width_;
  int radius_;
  std::vector<std::uint64_t> words_;
};

// Radius-0 atom invariant: atomic number, degree, hydrogen count, charge,
// aromaticity and ring membership.
inline std::string atom_invariant_string(const MolGraph& g, int atom, const std::vector<bool>& rings) {
  const Atom& a = g.atoms()[static_cast<std::size_t>(atom)];
  return std::to_string(a.element) + "," + std::to_string(g.degree(atom)) + "," +
         std::to_string(a.hydrogens) + "," + std::to_string(a.formal_charge) + "," +
         (a.aromatic ? "1" : "0") + "," + (rings[static_cast<std::size_t>(atom)] ? "1" : "0");
}

struct MorganEnvironment {
  int radius;
  int atom;
  std::string description;  // the string that was hashed
  std::uint64_t id;
};

// Circular environments for every atom at radius 0..radius. The radius-r
// description is the atom's previous identifier followed by the sorted
// (bond order, neighbor identifier) pairs; identifiers are 64-bit FNV-1a of
// the description.
inline std::vector<MorganEnvironment> morgan_environments(const MolGraph& g, int radius) {
  const auto rings = ring_atoms(g);
  const int n = static_cast<int>(g.num_atoms());
  std::vector<MorganEnvironment> envs;
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string d = atom_invariant_string(g, i, rings);
    ids[static_cast<std::size_t>(i)] = fnv1a64(d);
    envs.push_back({0, i, std::move(d), ids[static_cast<std::size_t>(i)]});
  }
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(ids.size());
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> env;
      for (auto [nbr, bond] : g.neighbors(i)) {
        env.emplace_back(static_cast<int>(g.bonds()[static_cast<std::size_t>(bond)].order),
                         ids[static_cast<std::size_t>(nbr)]);
      }
      std::sort(env.begin(), env.end());
      std::string d = std::to_string(ids[static_cast<std::size_t>(i)]);
      for (auto [order, id] : env) d += ";" + std::to_string(order) + ":" + std::to_string(id);
      next[static_cast<std::size_t>(i)] = fnv1a64(d);
      envs.push_back({r, i, std::move(d), next[static_cast<std::size_t>(i)]});
    }
    ids = std::move(next);
  }
  return envs;
}

inline Fingerprint morgan_fingerprint(const MolGraph& g, int radius = 2, std::size_t width = 2048) {
  if (radius < 0) throw Error("fingerprint radius must be non-negative");
  Fingerprint fp(width, radius);
  for (const auto& e : morgan_environments(g, radius)) fp.set(e.id % width);
  return fp;
}

// |a AND b| / |a OR b|; 1.0 when both are empty.
inline double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width() != b.width()) {
    throw Error("tanimoto: width mismatch " + std::to_string(a.width()) + " vs " +
                std::to_string(b.width()));
  }
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t k = 0; k < a.words().size(); ++k) {
    both += static_cast<std::size_t>(std::popcount(a.words()[k] & b.words()[k]));
    either += static_cast<std::size_t>(std::popcount(a.words()[k] | b.words()[k]));
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

// Changed-environment fingerprint of a reaction: product bits XOR the union of
// reactant bits.
inline Fingerprint reaction_fingerprint(std::span<const MolGraph* const> reactants,
                                        const MolGraph& product, int radius = 2,
                                        std::size_t width = 2048) {
  if (reactants.empty()) throw Error("reaction fingerprint needs at least one reactant");
  Fingerprint reactant_union(width, radius);
  for (const MolGraph* r : reactants) {
    const Fingerprint fp = morgan_fingerprint(*r, radius, width);
    for (std::size_t k = 0; k < fp.words().size(); ++k) reactant_union.words()[k] |= fp.words()[k];
  }
  Fingerprint out = morgan_fingerprint(product, radius, width);
  for (std::size_t k = 0; k < out.words().size(); ++k) out.words()[k] ^= reactant_union.words()[k];
  return out;
}

}  // namespace synthdag::chem
