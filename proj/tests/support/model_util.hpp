#pragma once

#include <functional>
#include <vector>

#include "synthdag/dag/decode_state.hpp"
#include "synthdag/model/config.hpp"
#include "synthdag/oracle/oracle.hpp"

namespace synthdag::testing {

// Every complete action sequence reachable under the masks, with stop
// products supplied by `oracle` (which should be deterministic).
inline std::vector<dag::ActionSeq> enumerate_sequences(const dag::Catalog& catalog, oracle::ReactionOracle& oracle,
                                                       int max_steps) {
  std::vector<dag::ActionSeq> out;
  Rng rng(0);
  std::function<void(const dag::DecodeState&)> go = [&](const dag::DecodeState& st) {
    if (st.finished()) {
      out.push_back(st.history());
      return;
    }
    for (dag::Action a : st.legal_list()) {
      if (a.kind == dag::ActionKind::stop_intermediate) a.mol = oracle.predict(st.intermediate_inputs(), rng);
      if (a.kind == dag::ActionKind::stop_final) a.mol = oracle.predict(st.final_inputs(), rng);
      dag::DecodeState next = st;
      next.apply(a);
      go(next);
    }
  };
  go(dag::DecodeState(catalog, max_steps));
  return out;
}

inline model::ModelConfig micro_config(model::Mode mode) {
  model::ModelConfig c;
  c.mode = mode;
  c.ggnn_steps = 2;
  c.atom_hidden = 8;
  c.mol_dim = 8;
  c.action_embed_dim = 8;
  c.context_layers = 2;
  c.context_width = 8;
  c.action_hidden = 8;
  c.latent_dim = 4;
  c.encoder_steps = 2;
  c.dropout = 0.0;
  return c;
}

}  // namespace synthdag::testing
