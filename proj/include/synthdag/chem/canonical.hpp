#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "synthdag/chem/mol_graph.hpp"
#include "synthdag/chem/smiles.hpp"

namespace synthdag::chem {

namespace detail {

using Ranks = std::vector<long>;

// Dense ranks from arbitrary sortable keys.
template <class Key>
Ranks dense_ranks(const std::vector<Key>& keys) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  Ranks ranks(keys.size(), 0);
  long r = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && keys[order[k - 1]] < keys[order[k]]) ++r;
    ranks[order[k]] = r;
  }
  return ranks;
}

inline long count_classes(const Ranks& ranks) {
  Ranks sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<long>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

inline Ranks initial_ranks(const MolGraph& g) {
  const auto rings = ring_atoms(g);
  using Key = std::tuple<int, int, int, int, int, int>;
  std::vector<Key> keys;
  keys.reserve(g.num_atoms());
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    const Atom& a = g.atoms()[i];
    keys.emplace_back(g.degree(static_cast<int>(i)), a.element, a.aromatic ? 1 : 0,
                      a.formal_charge, a.hydrogens, rings[i] ? 1 : 0);
  }
  return dense_ranks(keys);
}

// Iterative neighborhood refinement until the partition stops splitting.
inline Ranks refine(const MolGraph& g, Ranks ranks) {
  long classes = count_classes(ranks);
  while (true) {
    using Key = std::pair<long, std::vector<std::pair<long, int>>>;
    std::vector<Key> keys(g.num_atoms());
    for (std::size_t i = 0; i < g.num_atoms(); ++i) {
      std::vector<std::pair<long, int>> env;
      for (auto [nbr, bond] : g.neighbors(static_cast<int>(i))) {
        env.emplace_back(ranks[static_cast<std::size_t>(nbr)],
                         static_cast<int>(g.bonds()[static_cast<std::size_t>(bond)].order));
      }
      std::sort(env.begin(), env.end());
      keys[i] = {ranks[i], std::move(env)};
    }
    Ranks next = dense_ranks(keys);
    const long next_classes = count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes) return ranks;
    classes = next_classes;
  }
}

inline std::string atom_token(const MolGraph& g, int i) {
  const Atom& a = g.atoms()[static_cast<std::size_t>(i)];
  std::string symbol(element_symbol(a.element));
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  bool bare = in_organic_subset(a.element) && a.formal_charge == 0;
  if (bare) {
    int expected = implicit_hydrogens(a.element, g.bond_valence_sum(i));
    if (a.aromatic && (a.element == 8 || a.element == 16)) expected = 0;
    bare = expected == a.hydrogens;
  }
  if (bare) return symbol;
  std::string out = "[" + symbol;
  if (a.hydrogens > 0) {
    out += "H";
    if (a.hydrogens > 1) out += std::to_string(a.hydrogens);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? "+" : "-";
    const int m = a.formal_charge > 0 ? a.formal_charge : -a.formal_charge;
    if (m > 1) out += std::to_string(m);
  }
  return out + "]";
}

inline std::string bond_token(const MolGraph& g, const Bond& b) {
  switch (b.order) {
    case BondOrder::aromatic: return "";
    case BondOrder::double_: return "=";
    case BondOrder::triple: return "#";
    case BondOrder::single: {
      const bool both_aromatic = g.atoms()[static_cast<std::size_t>(b.a)].aromatic &&
                                 g.atoms()[static_cast<std::size_t>(b.b)].aromatic;
      return both_aromatic ? "-" : "";
    }
  }
  return "";
}

// Depth-first SMILES writer driven by an atom ordering (lower rank first).
class RankedWriter {
 public:
  RankedWriter(const MolGraph& g, const Ranks& ranks) : g_(g), ranks_(ranks) {}

  std::string write() {
    const std::size_t n = g_.num_atoms();
    visit_index_.assign(n, -1);
    children_.assign(n, {});
    ring_open_.assign(n, {});
    ring_close_.assign(n, {});
    seen_bond_.assign(g_.num_bonds(), false);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return ranks_[x] < ranks_[y]; });
    std::vector<std::string> components;
    for (std::size_t start : order) {
      if (visit_index_[start] != -1) continue;
      const int root = static_cast<int>(start);
      discover(root, -1);
      std::string out;
      digits_in_use_.assign(100, false);
      emit(root, -1, out);
      components.push_back(std::move(out));
    }
    std::sort(components.begin(), components.end());
    std::string joined;
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (i) joined += '.';
      joined += components[i];
    }
    return joined;
  }

 private:
  std::vector<std::pair<int, int>> sorted_neighbors(int atom) const {
    auto nbrs = g_.neighbors(atom);
    std::sort(nbrs.begin(), nbrs.end(), [&](auto x, auto y) {
      return ranks_[static_cast<std::size_t>(x.first)] < ranks_[static_cast<std::size_t>(y.first)];
    });
    return nbrs;
  }

  void discover(int atom, int parent_bond) {
    visit_index_[static_cast<std::size_t>(atom)] = counter_++;
    for (auto [nbr, bond] : sorted_neighbors(atom)) {
      if (bond == parent_bond || seen_bond_[static_cast<std::size_t>(bond)]) continue;
      seen_bond_[static_cast<std::size_t>(bond)] = true;
      if (visit_index_[static_cast<std::size_t>(nbr)] == -1) {
        children_[static_cast<std::size_t>(atom)].emplace_back(nbr, bond);
        discover(nbr, bond);
      } else {
        // nbr is an ancestor still on the DFS path: ring opens there.
        ring_open_[static_cast<std::size_t>(nbr)].emplace_back(atom, bond);
        ring_close_[static_cast<std::size_t>(atom)].emplace_back(nbr, bond);
      }
    }
  }

  int take_digit() {
    for (int d = 1; d < 100; ++d) {
      if (!digits_in_use_[static_cast<std::size_t>(d)]) {
        digits_in_use_[static_cast<std::size_t>(d)] = true;
        return d;
      }
    }
    throw MolError("too many open rings for SMILES output");
  }

  static std::string digit_token(int d) {
    return d < 10 ? std::to_string(d) : "%" + std::to_string(d);
  }

  void emit(int atom, int parent_bond, std::string& out) {
    const auto ua = static_cast<std::size_t>(atom);
    if (parent_bond >= 0) out += bond_token(g_, g_.bonds()[static_cast<std::size_t>(parent_bond)]);
    out += atom_token(g_, atom);
    // Close rings opened by ancestors, in order of the opener's visit.
    auto closes = ring_close_[ua];
    std::sort(closes.begin(), closes.end(), [&](auto x, auto y) {
      return visit_index_[static_cast<std::size_t>(x.first)] <
             visit_index_[static_cast<std::size_t>(y.first)];
    });
    std::vector<int> to_free;
    for (auto [opener, bond] : closes) {
      const int d = bond_digit_.at(bond);
      out += digit_token(d);
      to_free.push_back(d);
    }
    auto opens = ring_open_[ua];
    std::sort(opens.begin(), opens.end(), [&](auto x, auto y) {
      return visit_index_[static_cast<std::size_t>(x.first)] <
             visit_index_[static_cast<std::size_t>(y.first)];
    });
    for (auto [closer, bond] : opens) {
      (void)closer;
      const int d = take_digit();
      bond_digit_[bond] = d;
      out += bond_token(g_, g_.bonds()[static_cast<std::size_t>(bond)]);
      out += digit_token(d);
    }
    for (int d : to_free) digits_in_use_[static_cast<std::size_t>(d)] = false;
    const auto& kids = children_[ua];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out += '(';
      emit(kids[k].first, kids[k].second, out);
      if (branch) out += ')';
    }
  }

  const MolGraph& g_;
  const Ranks& ranks_;
  std::vector<int> visit_index_;
  int counter_ = 0;
  std::vector<std::vector<std::pair<int, int>>> children_;
  std::vector<std::vector<std::pair<int, int>>> ring_open_;
  std::vector<std::vector<std::pair<int, int>>> ring_close_;
  std::vector<bool> seen_bond_;
  std::vector<bool> digits_in_use_;
  std::map<int, int> bond_digit_;
};

// Explores tie-breaks, keeping the lexicographically smallest output. After
// `budget` complete orderings the search stops branching and follows the
// first candidate of each remaining tie.
class CanonicalSearch {
 public:
  CanonicalSearch(const MolGraph& g, int budget) : g_(g), budget_(budget) {}

  std::string run() {
    explore(refine(g_, initial_ranks(g_)));
    return best_;
  }

 private:
  void explore(const Ranks& ranks) {
    if (count_classes(ranks) == static_cast<long>(ranks.size())) {
      std::string s = RankedWriter(g_, ranks).write();
      if (!have_best_ || s < best_) {
        best_ = std::move(s);
        have_best_ = true;
      }
      ++leaves_;
      return;
    }
    // Smallest tied class.
    std::vector<long> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    long tied = -1;
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      if (sorted[k] == sorted[k - 1]) {
        tied = sorted[k];
        break;
      }
    }
    for (std::size_t m = 0; m < ranks.size(); ++m) {
      if (ranks[m] != tied) continue;
      Ranks split(ranks.size());
      for (std::size_t i = 0; i < ranks.size(); ++i) {
        split[i] = 2 * ranks[i] + ((ranks[i] == tied && i != m) ? 1 : 0);
      }
      explore(refine(g_, std::move(split)));
      if (leaves_ >= budget_) return;
    }
  }

  const MolGraph& g_;
  int budget_;
  int leaves_ = 0;
  std::string best_;
  bool have_best_ = false;
};

}  // namespace detail

// Canonical SMILES: invariant to the input atom order and stable under
// reparsing. Atom maps and stereo are not represented.
inline std::string canonical_smiles(const MolGraph& g) {
  if (g.empty()) return "";
  return detail::CanonicalSearch(g, 512).run();
}

// SMILES in the graph's own atom order (non-canonical).
inline std::string write_smiles(const MolGraph& g) {
  if (g.empty()) return "";
  detail::Ranks ranks(g.num_atoms());
  std::iota(ranks.begin(), ranks.end(), 0);
  return detail::RankedWriter(g, ranks).write();
}

}  // namespace synthdag::chem
