#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "synthdag/chem/molecule.hpp"
#include "synthdag/core/error.hpp"

namespace synthdag::dag {

// A1: node addition, A2: building-block identity, A3: connectivity choice.
enum class ActionType { node_addition, building_block, connectivity };

enum class ActionKind {
  add_block,          // 'B'
  add_product,        // 'P'
  block,              // building block identity
  reactant,           // existing molecule selected as reactant
  stop_intermediate,  // STOP_I
  stop_final,         // STOP_F
};

inline const char* to_string(ActionType t) {
  switch (t) {
    case ActionType::node_addition: return "A1";
    case ActionType::building_block: return "A2";
    case ActionType::connectivity: return "A3";
  }
  return "?";
}

constexpr ActionType type_of(ActionKind k) {
  switch (k) {
    case ActionKind::add_block:
    case ActionKind::add_product: return ActionType::node_addition;
    case ActionKind::block: return ActionType::building_block;
    default: return ActionType::connectivity;
  }
}

// `mol` is the block or reactant for those kinds. For stops it optionally
// carries the product that was formed (teacher forcing); it is not part of
// the text format.
struct Action {
  ActionKind kind = ActionKind::add_block;
  chem::MolPtr mol;

  static Action add_block() { return {ActionKind::add_block, nullptr}; }
  static Action add_product() { return {ActionKind::add_product, nullptr}; }
  static Action block(chem::MolPtr m) { return {ActionKind::block, std::move(m)}; }
  static Action reactant(chem::MolPtr m) { return {ActionKind::reactant, std::move(m)}; }
  static Action stop_intermediate(chem::MolPtr product = nullptr) {
    return {ActionKind::stop_intermediate, std::move(product)};
  }
  static Action stop_final(chem::MolPtr product = nullptr) {
    return {ActionKind::stop_final, std::move(product)};
  }

  bool names_molecule() const { return kind == ActionKind::block || kind == ActionKind::reactant; }

  // Equality ignores stop products.
  bool operator==(const Action& o) const {
    if (kind != o.kind) return false;
    if (!names_molecule()) return true;
    return mol && o.mol && mol->smiles == o.mol->smiles;
  }
};

class TransitionError : public Error {
 public:
  using Error::Error;
};

// Next action type after `prev` was taken under `prev_type`; nullopt once
// generation is finished.
inline std::optional<ActionType> transition(ActionType prev_type, const Action& prev) {
  if (type_of(prev.kind) != prev_type) {
    throw TransitionError(std::string("action does not belong to type ") + to_string(prev_type));
  }
  switch (prev.kind) {
    case ActionKind::add_block: return ActionType::building_block;
    case ActionKind::add_product: return ActionType::connectivity;
    case ActionKind::block: return ActionType::node_addition;
    case ActionKind::reactant: return ActionType::connectivity;
    case ActionKind::stop_intermediate: return ActionType::node_addition;
    case ActionKind::stop_final: return std::nullopt;
  }
  return std::nullopt;
}

struct ActionSeq {
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  bool operator==(const ActionSeq& o) const { return actions == o.actions; }
};

// Types implied by the transition rules, starting from A1. Throws if the
// sequence breaks the rules or does not end with STOP_F.
inline std::vector<ActionType> implied_types(const ActionSeq& seq) {
  std::vector<ActionType> types;
  std::optional<ActionType> cur = ActionType::node_addition;
  for (const Action& a : seq.actions) {
    if (!cur) throw TransitionError("action after STOP_F");
    types.push_back(*cur);
    cur = transition(*cur, a);
  }
  if (cur) throw TransitionError("sequence does not end with STOP_F");
  return types;
}

inline std::string to_token(const Action& a) {
  switch (a.kind) {
    case ActionKind::add_block: return "B";
    case ActionKind::add_product: return "P";
    case ActionKind::block: return "M:" + a.mol->smiles;
    case ActionKind::reactant: return "R:" + a.mol->smiles;
    case ActionKind::stop_intermediate: return "STOP_I";
    case ActionKind::stop_final: return "STOP_F";
  }
  return "?";
}

inline Action parse_token(std::string_view tok) {
  if (tok == "B") return Action::add_block();
  if (tok == "P") return Action::add_product();
  if (tok == "STOP_I") return Action::stop_intermediate();
  if (tok == "STOP_F") return Action::stop_final();
  if (tok.size() > 2 && tok[1] == ':' && (tok[0] == 'M' || tok[0] == 'R')) {
    auto m = chem::make_molecule(tok.substr(2));
    return tok[0] == 'M' ? Action::block(std::move(m)) : Action::reactant(std::move(m));
  }
  throw Error("bad action token '" + std::string(tok) + "'");
}

inline std::string to_text(const ActionSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.actions.size(); ++i) {
    if (i) out += ' ';
    out += to_token(seq.actions[i]);
  }
  return out;
}

inline ActionSeq parse_action_seq(const std::string& line) {
  ActionSeq seq;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) seq.actions.push_back(parse_token(tok));
  return seq;
}

}  // namespace synthdag::dag
