#pragma once

#include <algorithm>
#include <functional>
#include <span>

#include "synthdag/dag/decode_state.hpp"
#include "synthdag/oracle/oracle.hpp"

namespace synthdag::dag {

namespace detail {

// For each node, the longest shortest-path distance to the final node over
// the building blocks it descends from.
inline std::vector<int> block_depth(const SynthesisDAG& d) {
  const auto dist = distance_to_final(d);
  const auto par = d.parents();
  std::vector<int> depth(d.nodes.size(), -1);
  std::function<int(int)> go = [&](int u) {
    auto& v = depth[static_cast<std::size_t>(u)];
    if (v >= 0) return v;
    if (par[static_cast<std::size_t>(u)].empty()) return v = dist[static_cast<std::size_t>(u)];
    int best = 0;
    for (int p : par[static_cast<std::size_t>(u)]) best = std::max(best, go(p));
    return v = best;
  };
  for (std::size_t i = 0; i < d.nodes.size(); ++i) go(static_cast<int>(i));
  return depth;
}

}  // namespace detail

// Construction sequence for `d`. Starts from the building block furthest
// from the final node (ties drawn from `rng`); each product is emitted once
// its reactants exist. Stop actions carry the product they form.
inline ActionSeq serialize(const SynthesisDAG& d, Rng& rng) {
  if (const auto v = validate(d); !v.empty()) throw Error("serialize: invalid dag: " + v.front().what);
  if (d.final_node().kind != NodeKind::product) throw Error("serialize: final node is a building block");
  const auto par = d.parents();
  const auto depth = detail::block_depth(d);

  ActionSeq seq;
  std::vector<int> created(d.nodes.size(), -1);
  std::vector<bool> unused(d.nodes.size(), false);
  int counter = 0;

  auto by_creation = [&](std::vector<int> ids) {
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      return created[static_cast<std::size_t>(a)] < created[static_cast<std::size_t>(b)];
    });
    return ids;
  };

  std::function<void(int)> visit = [&](int u) {
    const auto su = static_cast<std::size_t>(u);
    if (created[su] >= 0) return;
    const Node& node = d.nodes[su];
    if (node.kind == NodeKind::building_block) {
      seq.actions.push_back(Action::add_block());
      seq.actions.push_back(Action::block(node.mol));
    } else {
      std::vector<int> ps = par[su];
      rng.shuffle(ps);
      std::stable_sort(ps.begin(), ps.end(), [&](int a, int b) {
        return depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)];
      });
      for (int p : ps) visit(p);
      seq.actions.push_back(Action::add_product());
      const bool is_final = u == d.final_id;
      for (int p : by_creation(par[su])) {
        if (is_final && unused[static_cast<std::size_t>(p)]) continue;
        seq.actions.push_back(Action::reactant(d.nodes[static_cast<std::size_t>(p)].mol));
        unused[static_cast<std::size_t>(p)] = false;
      }
      seq.actions.push_back(is_final ? Action::stop_final(node.mol) : Action::stop_intermediate(node.mol));
    }
    created[su] = counter++;
    unused[su] = true;
  };
  visit(d.final_id);
  return seq;
}

using ProductFn = std::function<MolPtr(std::span<const MolPtr>, const Action&)>;

struct ReplayResult {
  SynthesisDAG dag;
  ActionSeq seq;  // stop actions filled with the products formed
};

// Executes a construction sequence. `product` supplies every stop's product.
inline ReplayResult replay(const ActionSeq& seq, const Catalog& catalog, const ProductFn& product,
                           int max_steps = kDefaultMaxSteps) {
  DecodeState st(catalog, max_steps);
  for (const Action& a : seq.actions) {
    if (st.finished()) throw IllegalAction("action after STOP_F");
    if (a.kind == ActionKind::stop_intermediate || a.kind == ActionKind::stop_final) {
      if (!st.is_legal(a)) throw IllegalAction("masked stop action at step " + std::to_string(st.steps() + 1));
      const auto inputs = a.kind == ActionKind::stop_intermediate ? st.intermediate_inputs() : st.final_inputs();
      st.apply(Action{a.kind, product(inputs, a)});
    } else {
      st.apply(a);
    }
  }
  if (!st.finished()) throw IllegalAction("sequence does not end with STOP_F");
  return {st.to_dag(), st.history()};
}

inline ReplayResult replay(const ActionSeq& seq, const Catalog& catalog, oracle::ReactionOracle& oracle, Rng& rng,
                           int max_steps = kDefaultMaxSteps) {
  return replay(
      seq, catalog,
      [&](std::span<const MolPtr> inputs, const Action&) { return oracle.predict(inputs, rng); }, max_steps);
}

// Catalog made of the sequence's own building blocks.
inline Catalog catalog_of(const ActionSeq& seq) {
  Catalog c;
  for (const Action& a : seq.actions) {
    if (a.kind == ActionKind::block) c.add(a.mol);
  }
  return c;
}

inline ReplayResult replay(const ActionSeq& seq, oracle::ReactionOracle& oracle, Rng& rng,
                           int max_steps = kDefaultMaxSteps) {
  const Catalog c = catalog_of(seq);
  return replay(seq, c, oracle, rng, max_steps);
}

// Replays using the products recorded on the stop actions.
inline ReplayResult replay_recorded(const ActionSeq& seq, const Catalog& catalog, int max_steps = kDefaultMaxSteps) {
  return replay(
      seq, catalog,
      [](std::span<const MolPtr>, const Action& a) {
        if (!a.mol) throw Error("replay: stop action without a recorded product");
        return a.mol;
      },
      max_steps);
}

}  // namespace synthdag::dag
