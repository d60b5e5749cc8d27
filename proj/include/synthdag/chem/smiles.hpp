#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthdag/chem/mol_graph.hpp"

namespace synthdag::chem {

enum class SmilesErrorKind {
  syntax,
  unbalanced_parenthesis,
  dangling_ring_closure,
  unknown_element,
  valence_violation,
  unsupported,
  invalid_bond,
};

constexpr std::string_view to_string(SmilesErrorKind k) {
  switch (k) {
    case SmilesErrorKind::syntax: return "syntax";
    case SmilesErrorKind::unbalanced_parenthesis: return "unbalanced_parenthesis";
    case SmilesErrorKind::dangling_ring_closure: return "dangling_ring_closure";
    case SmilesErrorKind::unknown_element: return "unknown_element";
    case SmilesErrorKind::valence_violation: return "valence_violation";
    case SmilesErrorKind::unsupported: return "unsupported";
    case SmilesErrorKind::invalid_bond: return "invalid_bond";
  }
  return "unknown";
}

class SmilesError : public MolError {
 public:
  SmilesError(SmilesErrorKind kind, std::size_t position, const std::string& what)
      : MolError(std::string(to_string(kind)) + " at " + std::to_string(position) + ": " +
                 what),
        kind_(kind),
        position_(position) {}

  SmilesErrorKind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  SmilesErrorKind kind_;
  std::size_t position_;
};

struct ParseResult {
  MolGraph graph;
  bool stereo_discarded = false;  // '/', '\\' or '@' were present and ignored
};

// Implicit hydrogens for an organic-subset atom given its bond valence sum.
inline int implicit_hydrogens(int element, int valence_sum) {
  for (int v : default_valences(element)) {
    if (v >= valence_sum) return v - valence_sum;
  }
  return 0;
}

namespace detail {

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : s_(text) {}

  ParseResult run() {
    if (s_.empty()) fail(SmilesErrorKind::syntax, 0, "empty SMILES");
    for (unsigned char c : s_) {
      if (c > 127 || std::isspace(c)) fail(SmilesErrorKind::syntax, 0, "non-SMILES character");
    }
    std::vector<int> branch_stack;
    int prev = -1;
    std::optional<BondOrder> pending;
    bool pending_explicit = false;
    bool expect_atom = true;  // after '.', '(' or at start an atom must follow

    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (prev < 0 || pending) fail(SmilesErrorKind::syntax, pos_, "branch without anchor atom");
        branch_stack.push_back(prev);
        ++pos_;
        expect_atom = true;
        continue;
      }
      if (c == ')') {
        if (branch_stack.empty()) {
          fail(SmilesErrorKind::unbalanced_parenthesis, pos_, "unmatched ')'");
        }
        if (expect_atom || pending) fail(SmilesErrorKind::syntax, pos_, "empty branch");
        prev = branch_stack.back();
        branch_stack.pop_back();
        ++pos_;
        continue;
      }
      if (c == '.') {
        if (expect_atom || pending) fail(SmilesErrorKind::syntax, pos_, "misplaced '.'");
        prev = -1;
        ++pos_;
        expect_atom = true;
        continue;
      }
      if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\' || c == '$') {
        if (pending || prev < 0) fail(SmilesErrorKind::syntax, pos_, "misplaced bond symbol");
        if (c == '$') fail(SmilesErrorKind::unsupported, pos_, "quadruple bonds");
        if (c == '/' || c == '\\') stereo_ = true;
        pending = c == '=' ? BondOrder::double_
                  : c == '#' ? BondOrder::triple
                  : c == ':' ? BondOrder::aromatic
                             : BondOrder::single;
        pending_explicit = true;
        ++pos_;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0 || expect_atom) fail(SmilesErrorKind::syntax, pos_, "ring bond without atom");
        const std::size_t at = pos_;
        const int label = read_ring_label();
        ring_bond(prev, label, pending, at);
        pending.reset();
        pending_explicit = false;
        continue;
      }
      const std::size_t at = pos_;
      const int atom = c == '[' ? read_bracket_atom() : read_organic_atom();
      if (prev >= 0) {
        add_bond(prev, atom, pending, pending_explicit, at);
      } else if (pending) {
        fail(SmilesErrorKind::syntax, at, "bond before first atom");
      }
      pending.reset();
      pending_explicit = false;
      prev = atom;
      expect_atom = false;
    }
    if (!branch_stack.empty()) {
      fail(SmilesErrorKind::unbalanced_parenthesis, s_.size(), "unclosed '('");
    }
    if (pending) fail(SmilesErrorKind::syntax, s_.size(), "dangling bond symbol");
    if (expect_atom) fail(SmilesErrorKind::syntax, s_.size(), "missing atom");
    if (!open_rings_.empty()) {
      fail(SmilesErrorKind::dangling_ring_closure, s_.size(),
           "ring label " + std::to_string(open_rings_.begin()->first) + " never closed");
    }

    MolGraph graph;
    try {
      graph = MolGraph::create(atoms_, bonds_);
    } catch (const MolError& e) {
      fail(SmilesErrorKind::invalid_bond, 0, e.what());
    }
    // Implicit hydrogens for organic-subset atoms.
    std::vector<Atom> atoms = atoms_;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!bracket_[i]) {
        const int vsum = graph.bond_valence_sum(static_cast<int>(i));
        atoms[i].hydrogens = implicit_hydrogens(atoms[i].element, vsum);
        if (atoms[i].aromatic && (atoms[i].element == 8 || atoms[i].element == 16)) {
          atoms[i].hydrogens = 0;
        }
      }
    }
    graph = MolGraph::create(std::move(atoms), bonds_);
    if (auto problem = graph.valence_problem(); !problem.empty()) {
      fail(SmilesErrorKind::valence_violation, 0, problem);
    }
    return {std::move(graph), stereo_};
  }

 private:
  [[noreturn]] void fail(SmilesErrorKind kind, std::size_t at, const std::string& what) const {
    throw SmilesError(kind, at, what + " in '" + std::string(s_) + "'");
  }

  int read_ring_label() {
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
        fail(SmilesErrorKind::syntax, pos_, "'%' must be followed by two digits");
      }
      const int label = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
      return label;
    }
    return s_[pos_++] - '0';
  }

  void ring_bond(int atom, int label, std::optional<BondOrder> order, std::size_t at) {
    auto it = open_rings_.find(label);
    if (it == open_rings_.end()) {
      open_rings_[label] = {atom, order};
      return;
    }
    auto [other, other_order] = it->second;
    open_rings_.erase(it);
    if (order && other_order && *order != *other_order) {
      fail(SmilesErrorKind::invalid_bond, at, "conflicting ring-closure bond orders");
    }
    auto chosen = order ? order : other_order;
    add_bond(other, atom, chosen, chosen.has_value(), at);
  }

  void add_bond(int a, int b, std::optional<BondOrder> order, bool is_explicit, std::size_t at) {
    const bool both_aromatic = atoms_[static_cast<std::size_t>(a)].aromatic &&
                               atoms_[static_cast<std::size_t>(b)].aromatic;
    BondOrder o = order.value_or(both_aromatic ? BondOrder::aromatic : BondOrder::single);
    (void)is_explicit;
    if (o == BondOrder::aromatic && !both_aromatic) {
      fail(SmilesErrorKind::invalid_bond, at, "aromatic bond between non-aromatic atoms");
    }
    if (a == b) fail(SmilesErrorKind::invalid_bond, at, "atom bonded to itself");
    bonds_.push_back({a, b, o});
  }

  int push_atom(Atom atom, bool bracket) {
    atoms_.push_back(atom);
    bracket_.push_back(bracket);
    return static_cast<int>(atoms_.size()) - 1;
  }

  int read_organic_atom() {
    const char c = s_[pos_];
    auto two = s_.substr(pos_, 2);
    if (two == "Cl" || two == "Br") {
      pos_ += 2;
      return push_atom({.element = two == "Cl" ? 17 : 35}, false);
    }
    Atom atom;
    switch (c) {
      case 'B': atom.element = 5; break;
      case 'C': atom.element = 6; break;
      case 'N': atom.element = 7; break;
      case 'O': atom.element = 8; break;
      case 'P': atom.element = 15; break;
      case 'S': atom.element = 16; break;
      case 'F': atom.element = 9; break;
      case 'I': atom.element = 53; break;
      case 'b': atom = {.element = 5, .aromatic = true}; break;
      case 'c': atom = {.element = 6, .aromatic = true}; break;
      case 'n': atom = {.element = 7, .aromatic = true}; break;
      case 'o': atom = {.element = 8, .aromatic = true}; break;
      case 'p': atom = {.element = 15, .aromatic = true}; break;
      case 's': atom = {.element = 16, .aromatic = true}; break;
      case '*': fail(SmilesErrorKind::unknown_element, pos_, "wildcard atom");
      default:
        if (std::isalpha(static_cast<unsigned char>(c))) {
          fail(SmilesErrorKind::unknown_element, pos_,
               "'" + std::string(1, c) + "' is not an organic-subset element");
        }
        fail(SmilesErrorKind::syntax, pos_, "unexpected character '" + std::string(1, c) + "'");
    }
    ++pos_;
    return push_atom(atom, false);
  }

  int read_bracket_atom() {
    const std::size_t open = pos_++;
    auto peek = [&]() -> char { return pos_ < s_.size() ? s_[pos_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      fail(SmilesErrorKind::unsupported, pos_, "isotopes");
    }
    Atom atom;
    // Element symbol: uppercase + optional lowercase, or aromatic lowercase.
    std::string symbol;
    if (std::isupper(static_cast<unsigned char>(peek()))) {
      symbol += s_[pos_++];
      if (std::islower(static_cast<unsigned char>(peek()))) {
        std::string two = symbol + peek();
        if (atomic_number(two)) {
          symbol = two;
          ++pos_;
        }
      }
      auto z = atomic_number(symbol);
      if (!z) fail(SmilesErrorKind::unknown_element, open, "unknown element '" + symbol + "'");
      atom.element = *z;
    } else if (std::islower(static_cast<unsigned char>(peek()))) {
      symbol += s_[pos_++];
      if (std::islower(static_cast<unsigned char>(peek()))) {
        std::string two = symbol + peek();
        if (two == "se" || two == "as") {
          symbol = two;
          ++pos_;
        }
      }
      std::string upper = symbol;
      upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
      auto z = atomic_number(upper);
      if (!z || !can_be_aromatic(*z)) {
        fail(SmilesErrorKind::unknown_element, open, "unknown aromatic element '" + symbol + "'");
      }
      atom.element = *z;
      atom.aromatic = true;
    } else if (peek() == '*') {
      fail(SmilesErrorKind::unknown_element, pos_, "wildcard atom");
    } else {
      fail(SmilesErrorKind::syntax, pos_, "missing element in bracket atom");
    }
    // Chirality.
    bool chiral = false;
    while (peek() == '@') {
      chiral = stereo_ = true;
      ++pos_;
    }
    if (chiral && (peek() == 'T' || peek() == 'A' || peek() == 'S' || peek() == 'O')) {
      // @TH1, @AL2, @SP1, @OH12 style chirality classes
      pos_ += 2;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'H') {
      ++pos_;
      int h = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        h = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) h = h * 10 + (s_[pos_++] - '0');
      }
      atom.hydrogens = h;
    }
    if (peek() == '+' || peek() == '-') {
      const char sign = s_[pos_++];
      int magnitude = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          magnitude = magnitude * 10 + (s_[pos_++] - '0');
        }
      } else {
        while (peek() == sign) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (peek() == ':') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail(SmilesErrorKind::syntax, pos_, "atom class must be numeric");
      }
      int map = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) map = map * 10 + (s_[pos_++] - '0');
      atom.map_number = map;
    }
    if (peek() != ']') fail(SmilesErrorKind::syntax, pos_, "unterminated bracket atom");
    ++pos_;
    return push_atom(atom, true);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<Atom> atoms_;
  std::vector<bool> bracket_;
  std::vector<Bond> bonds_;
  std::map<int, std::pair<int, std::optional<BondOrder>>> open_rings_;
  bool stereo_ = false;
};

}  // namespace detail

inline ParseResult parse_smiles_ex(std::string_view text) {
  return detail::SmilesParser(text).run();
}

inline MolGraph parse_smiles(std::string_view text) { return parse_smiles_ex(text).graph; }

// Copy of g with all reaction atom maps cleared.
inline MolGraph strip_atom_maps(const MolGraph& g) {
  std::vector<Atom> atoms = g.atoms();
  for (Atom& a : atoms) a.map_number = 0;
  return MolGraph::create(std::move(atoms), g.bonds());
}

}  // namespace synthdag::chem
