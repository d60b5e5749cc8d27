#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/dag/action.hpp"
#include "synthdag/dag/catalog.hpp"
#include "synthdag/dag/raw_graph.hpp"

namespace synthdag::dag {

inline constexpr int kDefaultMaxSteps = 64;
// B, block, P, STOP_F
inline constexpr int kMinSteps = 4;

class IllegalAction : public Error {
 public:
  using Error::Error;
};

class MaxStepsExceeded : public Error {
 public:
  using Error::Error;
};

// Masks for the current step. Only the fields of the current type are used.
struct LegalActions {
  ActionType type = ActionType::node_addition;
  bool add_block = false;
  bool add_product = false;
  std::vector<bool> blocks;     // over catalog entries
  std::vector<bool> reactants;  // over molecules created so far
  bool stop_intermediate = false;
  bool stop_final = false;

  std::size_t count() const {
    switch (type) {
      case ActionType::node_addition: return std::size_t{add_block} + std::size_t{add_product};
      case ActionType::building_block: return static_cast<std::size_t>(std::count(blocks.begin(), blocks.end(), true));
      case ActionType::connectivity:
        return static_cast<std::size_t>(std::count(reactants.begin(), reactants.end(), true)) +
               std::size_t{stop_intermediate} + std::size_t{stop_final};
    }
    return 0;
  }
};

// Molecule-level state of the construction process: M (all molecules, in
// creation order), U (unused), R (reactants of the open product node). Also
// records the raw creation events so the DAG can be recovered at the end.
//
// max_steps counts every action including the initial 'B'. Actions that
// could not be completed within the remaining budget are masked, so a
// decode that follows the masks always ends with STOP_F in time.
class DecodeState {
 public:
  explicit DecodeState(const Catalog& catalog, int max_steps = kDefaultMaxSteps)
      : catalog_(&catalog), max_steps_(max_steps), block_used_(catalog.size(), false) {
    if (catalog.empty()) throw Error("decode: empty building-block catalog");
    if (max_steps < kMinSteps) {
      throw MaxStepsExceeded("max_steps " + std::to_string(max_steps) + " is below the minimum of 4");
    }
  }

  const Catalog& catalog() const { return *catalog_; }
  ActionType type() const { return type_; }
  bool finished() const { return finished_; }
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }
  int remaining() const { return max_steps_ - steps_; }

  const std::vector<MolPtr>& molecules() const { return mols_; }
  int find(const std::string& smiles) const {
    auto it = index_.find(smiles);
    return it == index_.end() ? -1 : it->second;
  }
  bool is_unused(int i) const { return unused_[static_cast<std::size_t>(i)]; }
  bool is_selected(int i) const { return selected_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& selected() const { return reactant_order_; }
  const ActionSeq& history() const { return history_; }
  const RawGraph& raw() const { return raw_; }

  // Reactants sent to the oracle on STOP_I.
  std::vector<MolPtr> intermediate_inputs() const {
    std::vector<MolPtr> out;
    for (int i : reactant_order_) out.push_back(mols_[static_cast<std::size_t>(i)]);
    return out;
  }

  // Reactants sent to the oracle on STOP_F: R, then U in creation order.
  std::vector<MolPtr> final_inputs() const {
    std::vector<MolPtr> out = intermediate_inputs();
    for (std::size_t i = 0; i < mols_.size(); ++i) {
      if (unused_[i] && !selected_[i]) out.push_back(mols_[i]);
    }
    return out;
  }

  LegalActions legal() const {
    LegalActions l;
    l.type = type_;
    if (finished_) return l;
    const int b = remaining();
    switch (type_) {
      case ActionType::node_addition:
        l.add_block = blocks_in_m_ < catalog_->size() && b >= 4;
        l.add_product = steps_ > 0 && !mols_.empty() && b >= 2;
        break;
      case ActionType::building_block:
        l.blocks.resize(catalog_->size());
        for (std::size_t i = 0; i < catalog_->size(); ++i) l.blocks[i] = !block_used_[i] && b >= 3;
        break;
      case ActionType::connectivity:
        l.reactants.resize(mols_.size());
        for (std::size_t i = 0; i < mols_.size(); ++i) l.reactants[i] = !selected_[i] && b >= 2;
        l.stop_intermediate = !reactant_order_.empty() && b >= 3;
        l.stop_final = b >= 1;
        break;
    }
    return l;
  }

  bool is_legal(const Action& a) const {
    if (finished_ || type_of(a.kind) != type_) return false;
    const LegalActions l = legal();
    switch (a.kind) {
      case ActionKind::add_block: return l.add_block;
      case ActionKind::add_product: return l.add_product;
      case ActionKind::block: {
        const int i = a.mol ? catalog_->find(a.mol->smiles) : -1;
        return i >= 0 && l.blocks[static_cast<std::size_t>(i)];
      }
      case ActionKind::reactant: {
        const int i = a.mol ? find(a.mol->smiles) : -1;
        return i >= 0 && l.reactants[static_cast<std::size_t>(i)];
      }
      case ActionKind::stop_intermediate: return l.stop_intermediate;
      case ActionKind::stop_final: return l.stop_final;
    }
    return false;
  }

  // Applies a legal action. Stops must carry their product in `a.mol`.
  void apply(const Action& a) {
    if (finished_) throw IllegalAction("decode already finished");
    if (steps_ >= max_steps_) throw MaxStepsExceeded("decode exceeded " + std::to_string(max_steps_) + " steps");
    if (!is_legal(a)) {
      throw IllegalAction("masked action " + (a.names_molecule() && !a.mol ? std::string("<null>") : to_token(a)) +
                          " at step " + std::to_string(steps_ + 1) + " (" + to_string(type_) + ")");
    }
    switch (a.kind) {
      case ActionKind::add_block:
      case ActionKind::add_product: break;
      case ActionKind::block: {
        const int c = catalog_->find(a.mol->smiles);
        const MolPtr& m = (*catalog_)[static_cast<std::size_t>(c)];
        raw_.events.push_back({m, {}});
        add_molecule(m);
        break;
      }
      case ActionKind::reactant: {
        const auto i = static_cast<std::size_t>(find(a.mol->smiles));
        selected_[i] = true;
        unused_[i] = false;
        reactant_order_.push_back(static_cast<int>(i));
        break;
      }
      case ActionKind::stop_intermediate:
      case ActionKind::stop_final: {
        if (!a.mol) throw IllegalAction("stop action without a product");
        std::vector<MolPtr> inputs =
            a.kind == ActionKind::stop_intermediate ? intermediate_inputs() : final_inputs();
        if (a.kind == ActionKind::stop_final) {
          for (std::size_t i = 0; i < mols_.size(); ++i) unused_[i] = false;
        }
        raw_.events.push_back({a.mol, std::move(inputs)});
        for (int i : reactant_order_) selected_[static_cast<std::size_t>(i)] = false;
        reactant_order_.clear();
        const int existing = find(a.mol->smiles);
        if (existing >= 0) {
          unused_[static_cast<std::size_t>(existing)] = a.kind == ActionKind::stop_intermediate;
        } else {
          add_molecule(a.mol);
          if (a.kind == ActionKind::stop_final) unused_.back() = false;
        }
        if (a.kind == ActionKind::stop_final) raw_.final_mol = a.mol;
        break;
      }
    }
    history_.actions.push_back(a);
    ++steps_;
    const auto next = transition(type_, a);
    if (next) {
      type_ = *next;
    } else {
      finished_ = true;
    }
  }

  // Concrete legal actions. Stops come without a product.
  std::vector<Action> legal_list() const {
    std::vector<Action> out;
    const LegalActions l = legal();
    if (finished_) return out;
    switch (type_) {
      case ActionType::node_addition:
        if (l.add_block) out.push_back(Action::add_block());
        if (l.add_product) out.push_back(Action::add_product());
        break;
      case ActionType::building_block:
        for (std::size_t i = 0; i < l.blocks.size(); ++i) {
          if (l.blocks[i]) out.push_back(Action::block((*catalog_)[i]));
        }
        break;
      case ActionType::connectivity:
        for (std::size_t i = 0; i < l.reactants.size(); ++i) {
          if (l.reactants[i]) out.push_back(Action::reactant(mols_[i]));
        }
        if (l.stop_intermediate) out.push_back(Action::stop_intermediate());
        if (l.stop_final) out.push_back(Action::stop_final());
        break;
    }
    return out;
  }

  // Loop-free DAG of a finished decode.
  SynthesisDAG to_dag() const {
    if (!finished_) throw Error("decode not finished");
    return remove_loops(raw_);
  }

 private:
  void add_molecule(const MolPtr& m) {
    index_.emplace(m->smiles, static_cast<int>(mols_.size()));
    mols_.push_back(m);
    unused_.push_back(true);
    selected_.push_back(false);
    const int c = catalog_->find(m->smiles);
    if (c >= 0 && !block_used_[static_cast<std::size_t>(c)]) {
      block_used_[static_cast<std::size_t>(c)] = true;
      ++blocks_in_m_;
    }
  }

  const Catalog* catalog_;
  int max_steps_;
  ActionType type_ = ActionType::node_addition;
  bool finished_ = false;
  int steps_ = 0;
  std::vector<MolPtr> mols_;
  std::unordered_map<std::string, int> index_;
  std::vector<bool> unused_;
  std::vector<bool> selected_;
  std::vector<int> reactant_order_;
  std::vector<bool> block_used_;
  std::size_t blocks_in_m_ = 0;
  RawGraph raw_;
  ActionSeq history_;
};

}  // namespace synthdag::dag
