#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthdag/dag/decode_state.hpp"
#include "synthdag/model/config.hpp"
#include "synthdag/model/mol_batch.hpp"
#include "synthdag/nn/layers.hpp"
#include "synthdag/nn/sample.hpp"
#include "synthdag/oracle/oracle.hpp"

namespace synthdag::model {

using chem::MolPtr;
using dag::Action;
using dag::ActionKind;
using dag::ActionSeq;
using dag::ActionType;
using dag::Catalog;
using dag::DecodeState;
using dag::SynthesisDAG;

// Rows of the token table used by teacher forcing: the four abstract
// actions, then molecule embeddings.
inline constexpr int kTokB = 0;
inline constexpr int kTokP = 1;
inline constexpr int kTokStopI = 2;
inline constexpr int kTokStopF = 3;
inline constexpr int kTokMol0 = 4;

inline const char* net_name(ActionType t) {
  switch (t) {
    case ActionType::node_addition: return "net.na";
    case ActionType::building_block: return "net.bbmi";
    case ActionType::connectivity: return "net.cc";
  }
  return "";
}

// Logits over the candidates of one step. Layout: node addition [B, P];
// building block: catalog order; connectivity: molecules in creation order,
// then STOP_I, then STOP_F.
struct MaskedLogits {
  ActionType type = ActionType::node_addition;
  std::vector<double> logits;
  std::vector<std::uint8_t> mask;
  std::vector<Action> candidates;

  std::size_t live() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

struct Decoded {
  SynthesisDAG dag;
  ActionSeq seq;
  double log_prob = 0;
};

// Teacher-forcing layout of a batch of action sequences: a shared molecule
// table and, per sequence and scored step, the input token, the decision
// type, the live candidate tokens and the chosen token.
struct TeacherPlan {
  std::vector<MolPtr> mols;
  std::unordered_map<std::string, int> token;
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets;
  std::vector<std::vector<ActionType>> types;
  std::vector<std::vector<std::vector<int>>> cands;

  int add_mol(const MolPtr& m) {
    auto [it, fresh] = token.emplace(m->smiles, kTokMol0 + static_cast<int>(mols.size()));
    if (fresh) mols.push_back(m);
    return it->second;
  }
  int tok(const MolPtr& m) const { return token.at(m->smiles); }
  std::size_t num_tokens() const { return mols.size() + kTokMol0; }
};

// The first action is always 'B' and is not scored.
inline TeacherPlan plan_teacher(std::span<const ActionSeq> seqs, const Catalog& catalog, int max_steps,
                                std::span<const SynthesisDAG> dags = {}) {
  TeacherPlan p;
  for (const auto& m : catalog.blocks()) p.add_mol(m);
  for (const auto& d : dags) {
    for (const auto& n : d.nodes) p.add_mol(n.mol);
  }
  for (const auto& s : seqs) {
    for (const auto& a : s.actions) {
      if (a.mol) p.add_mol(a.mol);
    }
  }
  auto token_of = [&](const Action& a) {
    switch (a.kind) {
      case ActionKind::add_block: return kTokB;
      case ActionKind::add_product: return kTokP;
      case ActionKind::stop_intermediate: return kTokStopI;
      case ActionKind::stop_final: return kTokStopF;
      default: return p.tok(a.mol);
    }
  };
  for (const auto& s : seqs) {
    if (s.actions.empty() || s.actions[0].kind != ActionKind::add_block) {
      throw dag::IllegalAction("sequence must start with B");
    }
    DecodeState st(catalog, max_steps);
    std::vector<int> in, tg;
    std::vector<ActionType> ty;
    std::vector<std::vector<int>> cd;
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      const Action& a = s.actions[i];
      if ((a.kind == ActionKind::stop_intermediate || a.kind == ActionKind::stop_final) && !a.mol) {
        throw dag::IllegalAction("teacher forcing needs the product of every stop action");
      }
      if (i > 0) {
        in.push_back(token_of(s.actions[i - 1]));
        ty.push_back(st.type());
        const auto l = st.legal();
        std::vector<int> c;
        switch (st.type()) {
          case ActionType::node_addition:
            if (l.add_block) c.push_back(kTokB);
            if (l.add_product) c.push_back(kTokP);
            break;
          case ActionType::building_block:
            for (std::size_t b = 0; b < l.blocks.size(); ++b) {
              if (l.blocks[b]) c.push_back(p.tok(catalog[b]));
            }
            break;
          case ActionType::connectivity:
            for (std::size_t r = 0; r < l.reactants.size(); ++r) {
              if (l.reactants[r]) c.push_back(p.tok(st.molecules()[r]));
            }
            if (l.stop_intermediate) c.push_back(kTokStopI);
            if (l.stop_final) c.push_back(kTokStopF);
            break;
        }
        cd.push_back(std::move(c));
        tg.push_back(token_of(a));
      }
      st.apply(a);
    }
    if (!st.finished()) throw dag::IllegalAction("sequence does not end with STOP_F");
    p.inputs.push_back(std::move(in));
    p.targets.push_back(std::move(tg));
    p.types.push_back(std::move(ty));
    p.cands.push_back(std::move(cd));
  }
  return p;
}

template <class T>
struct Posterior {
  nn::Var<T> mu;
  nn::Var<T> logvar;
};

template <class T>
struct WaeParts {
  nn::Var<T> loss;
  double nll = 0;
  double mmd = 0;
};

template <class T>
class DogModel {
 public:
  using M = nn::Mat<T>;
  using V = nn::Var<T>;
  using TapeT = nn::Tape<T>;

  DogModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    init(rng);
  }

  // Wraps existing weights; every parameter must be present with its shape.
  DogModel(const ModelConfig& cfg, nn::ParamStore<T> store) : cfg_(cfg), store_(std::move(store)) {
    cfg_.validate();
    const std::size_t before = store_.size();
    Rng rng(0);
    init(rng);
    if (store_.size() != before) throw ConfigError("model weights are missing parameters for this configuration");
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore<T>& params() { return store_; }
  const nn::ParamStore<T>& params() const { return store_; }

  // ---- molecule embeddings -------------------------------------------------

  V embed(TapeT& t, std::span<const MolPtr> mols) {
    const MolBatch<T> b = make_mol_batch<T>(mols);
    V h = nn::apply_linear(t, store_, "mol.in", t.constant(b.features));
    h = nn::ggnn_propagate(t, store_, "mol.ggnn", h, b.adj, cfg_.ggnn_steps);
    return nn::gated_readout(t, store_, "mol.readout", h, b.segment);
  }

  // Cached, gradient-free embedding (1 x mol_dim).
  M embed_molecule(const MolPtr& m) {
    ensure_cached({&m, 1});
    std::lock_guard lock(*cache_mu_);
    return cache_.at(m->smiles);
  }

  void ensure_cached(std::span<const MolPtr> mols) {
    std::vector<MolPtr> missing;
    {
      std::lock_guard lock(*cache_mu_);
      std::unordered_map<std::string, bool> seen;
      for (const auto& m : mols) {
        if (!cache_.count(m->smiles) && seen.emplace(m->smiles, true).second) missing.push_back(m);
      }
    }
    if (missing.empty()) return;
    TapeT t(false);
    const M e = embed(t, missing).value();
    std::lock_guard lock(*cache_mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i]->smiles, e.row(static_cast<Eigen::Index>(i)));
  }

  // Rows stay valid until the next invalidate().
  const M* cached(const std::string& smiles) const {
    std::lock_guard lock(*cache_mu_);
    auto it = cache_.find(smiles);
    return it == cache_.end() ? nullptr : &it->second;
  }

  void invalidate_cache() {
    std::lock_guard lock(*cache_mu_);
    cache_.clear();
  }

  // ---- decoder --------------------------------------------------------------

  V abstract(TapeT& t, int tok) {
    static const char* names[] = {"act.h_B", "act.h_P", "act.h_STOPI", "act.h_STOPF"};
    return t.param(store_.at(names[tok]));
  }

  // Gen mode ignores z and uses zeros.
  M latent_or_zero(const M& z, std::size_t n) const {
    if (cfg_.mode == Mode::gen || z.size() == 0) return M::Zero(static_cast<Eigen::Index>(n), cfg_.latent_dim);
    if (z.cols() != cfg_.latent_dim || z.rows() != static_cast<Eigen::Index>(n)) throw ShapeError("latent has the wrong shape");
    if (!z.allFinite()) throw NumericError("latent is not finite");
    return z;
  }

  // Sum over the batch of -log p(sequence | z). z has one row per sequence.
  V nll_sum(TapeT& t, const TeacherPlan& plan, V z, bool training, Rng& rng) {
    const std::size_t n = plan.inputs.size();
    if (n == 0) throw Error("empty batch");
    if (z.rows() != static_cast<Eigen::Index>(n)) throw ShapeError("nll: one latent row per sequence expected");
    V tok = token_table(t, plan);
    return nll_with_tokens(t, plan, tok, z, training, rng);
  }

  V token_table(TapeT& t, const TeacherPlan& plan) {
    std::vector<V> parts = {abstract(t, kTokB), abstract(t, kTokP), abstract(t, kTokStopI), abstract(t, kTokStopF)};
    parts.push_back(embed(t, plan.mols));
    return nn::concat_rows(parts);
  }

  V nll_with_tokens(TapeT& t, const TeacherPlan& plan, V tok, V z, bool training, Rng& rng) {
    const std::size_t n = plan.inputs.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return plan.inputs[static_cast<std::size_t>(a)].size() > plan.inputs[static_cast<std::size_t>(b)].size(); });
    const std::size_t steps = plan.inputs[static_cast<std::size_t>(order[0])].size();
    const double p = training ? cfg_.dropout : 0.0;

    V zs = nn::gather_rows(z, order);
    std::vector<V> hidden;
    for (int l = 0; l < cfg_.context_layers; ++l) hidden.push_back(nn::apply_linear(t, store_, "ctx.z" + std::to_string(l), zs));

    std::vector<V> outs;
    std::vector<std::pair<int, std::size_t>> row_of;  // (sequence, step) per output row
    for (std::size_t s = 0; s < steps; ++s) {
      std::size_t k = 0;
      while (k < n && plan.inputs[static_cast<std::size_t>(order[k])].size() > s) ++k;
      std::vector<int> in(k);
      for (std::size_t i = 0; i < k; ++i) {
        in[i] = plan.inputs[static_cast<std::size_t>(order[i])][s];
        row_of.emplace_back(order[i], s);
      }
      V x = nn::gather_rows(tok, std::move(in));
      for (int l = 0; l < cfg_.context_layers; ++l) {
        V h = hidden[static_cast<std::size_t>(l)];
        if (h.rows() != static_cast<Eigen::Index>(k)) h = nn::row_block(h, 0, static_cast<Eigen::Index>(k));
        h = nn::apply_gru(t, store_, "ctx.gru" + std::to_string(l), x, h);
        hidden[static_cast<std::size_t>(l)] = h;
        x = nn::dropout(h, p, training, rng);
      }
      outs.push_back(x);
    }
    V ctx = nn::concat_rows(outs);

    const std::size_t ntok = plan.num_tokens();
    V total{};
    bool any = false;
    for (ActionType type : {ActionType::node_addition, ActionType::building_block, ActionType::connectivity}) {
      std::vector<int> rows;
      std::vector<int> targets;
      std::vector<std::uint8_t> mask;
      for (std::size_t r = 0; r < row_of.size(); ++r) {
        const auto [seq, step] = row_of[r];
        if (plan.types[static_cast<std::size_t>(seq)][step] != type) continue;
        rows.push_back(static_cast<int>(r));
        targets.push_back(plan.targets[static_cast<std::size_t>(seq)][step]);
        const std::size_t base = mask.size();
        mask.resize(base + ntok, 0);
        for (int c : plan.cands[static_cast<std::size_t>(seq)][step]) mask[base + static_cast<std::size_t>(c)] = 1;
      }
      if (rows.empty()) continue;
      V w = nn::mlp_relu_1h(t, store_, net_name(type), nn::gather_rows(ctx, std::move(rows)));
      V ce = nn::masked_softmax_ce(nn::matmul_nt(w, tok), std::move(mask), std::move(targets));
      total = any ? nn::add(total, ce) : ce;
      any = true;
    }
    return total;
  }

  // log p(seq | z); gen mode ignores z.
  double log_prob(const ActionSeq& seq, const Catalog& catalog, const M& z = M()) {
    const TeacherPlan plan = plan_teacher({&seq, 1}, catalog, cfg_.max_steps);
    TapeT t(false);
    Rng rng(0);
    return -static_cast<double>(nll_sum(t, plan, t.constant(latent_or_zero(z, 1)), false, rng).scalar());
  }

  // Logits of one decision given the top-layer context row.
  MaskedLogits decode_logits(const M& context, const DecodeState& st) {
    if (context.rows() != 1 || context.cols() != cfg_.context_width) throw ShapeError("decode_logits: context shape");
    TapeT t(false);
    const M w = nn::mlp_relu_1h(t, store_, net_name(st.type()), t.constant(context)).value();
    return candidate_logits(w, st, nullptr);
  }

  // w: 1 x mol_dim action-network output. cat_emb, when given, holds the
  // catalog embeddings (one row per block).
  MaskedLogits candidate_logits(const M& w, const DecodeState& st, const M* cat_emb) {
    MaskedLogits out;
    out.type = st.type();
    const auto l = st.legal();
    auto dot = [&](const M& e) { return static_cast<double>((w.row(0) * e.row(0).transpose())(0, 0)); };
    auto push = [&](double z, bool live, Action a) {
      out.logits.push_back(z);
      out.mask.push_back(live ? 1 : 0);
      out.candidates.push_back(std::move(a));
    };
    switch (st.type()) {
      case ActionType::node_addition:
        push(dot(store_.at("act.h_B").value), l.add_block, Action::add_block());
        push(dot(store_.at("act.h_P").value), l.add_product, Action::add_product());
        break;
      case ActionType::building_block: {
        const Catalog& cat = st.catalog();
        M local;
        if (!cat_emb) {
          ensure_cached(cat.blocks());
          local.resize(static_cast<Eigen::Index>(cat.size()), cfg_.mol_dim);
          for (std::size_t i = 0; i < cat.size(); ++i) local.row(static_cast<Eigen::Index>(i)) = *cached(cat[i]->smiles);
          cat_emb = &local;
        }
        const M s = w * cat_emb->transpose();
        for (std::size_t i = 0; i < cat.size(); ++i) push(static_cast<double>(s(0, static_cast<Eigen::Index>(i))), l.blocks[i], Action::block(cat[i]));
        break;
      }
      case ActionType::connectivity: {
        ensure_cached(st.molecules());
        for (std::size_t i = 0; i < st.molecules().size(); ++i) {
          const MolPtr& m = st.molecules()[i];
          push(dot(*cached(m->smiles)), l.reactants[i], Action::reactant(m));
        }
        push(dot(store_.at("act.h_STOPI").value), l.stop_intermediate, Action::stop_intermediate());
        push(dot(store_.at("act.h_STOPF").value), l.stop_final, Action::stop_final());
        break;
      }
    }
    if (out.live() == 0) throw Error("decode: every candidate is masked");
    return out;
  }

  // Runs the construction process for every row of z, sampling (or taking
  // the argmax) at each decision. Each row uses its own random streams
  // derived from one draw of `rng`, so results do not depend on batching.
  std::vector<Decoded> decode(const M& z_in, std::size_t n, const Catalog& catalog, oracle::ReactionOracle& oracle,
                              Rng& rng, bool greedy, int max_steps = -1) {
    return decode_seeded(z_in, n, catalog, oracle, rng.next_u64(), 0, greedy, max_steps);
  }

  // Row i of the batch draws from streams keyed by (base, first_index + i).
  std::vector<Decoded> decode_seeded(const M& z_in, std::size_t n, const Catalog& catalog, oracle::ReactionOracle& oracle,
                                     std::uint64_t base, std::size_t first_index, bool greedy, int max_steps = -1) {
    if (max_steps < 0) max_steps = cfg_.max_steps;
    const M z = latent_or_zero(z_in, n);
    ensure_cached(catalog.blocks());
    M cat_emb(static_cast<Eigen::Index>(catalog.size()), cfg_.mol_dim);
    for (std::size_t i = 0; i < catalog.size(); ++i) cat_emb.row(static_cast<Eigen::Index>(i)) = *cached(catalog[i]->smiles);

    struct Live {
      std::size_t idx;
      DecodeState st;
      Rng pick;
      Rng orc;
      double lp = 0;
      M input;
    };
    std::vector<Live> live;
    live.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Rng r(mix64(base + first_index + i));
      live.push_back({i, DecodeState(catalog, max_steps), r.child("pick"), r.child("oracle"), 0.0, store_.at("act.h_B").value});
      live.back().st.apply(Action::add_block());
    }
    std::vector<M> hidden;
    {
      TapeT t(false);
      V zc = t.constant(z);
      for (int l = 0; l < cfg_.context_layers; ++l) {
        hidden.push_back(nn::apply_linear(t, store_, "ctx.z" + std::to_string(l), zc).value());
      }
    }
    std::vector<Decoded> out(n);
    while (!live.empty()) {
      const auto k = static_cast<Eigen::Index>(live.size());
      M x(k, cfg_.mol_dim);
      for (Eigen::Index i = 0; i < k; ++i) x.row(i) = live[static_cast<std::size_t>(i)].input;
      TapeT t(false);
      V xv = t.constant(std::move(x));
      for (int l = 0; l < cfg_.context_layers; ++l) {
        xv = nn::apply_gru(t, store_, "ctx.gru" + std::to_string(l), xv, t.constant(hidden[static_cast<std::size_t>(l)]));
        hidden[static_cast<std::size_t>(l)] = xv.value();
      }
      const M& ctx = hidden.back();
      M w(k, cfg_.mol_dim);
      for (ActionType type : {ActionType::node_addition, ActionType::building_block, ActionType::connectivity}) {
        std::vector<int> rows;
        for (Eigen::Index i = 0; i < k; ++i) {
          if (live[static_cast<std::size_t>(i)].st.type() == type) rows.push_back(static_cast<int>(i));
        }
        if (rows.empty()) continue;
        const M wg = nn::mlp_relu_1h(t, store_, net_name(type), nn::gather_rows(t.constant(ctx), rows)).value();
        for (std::size_t r = 0; r < rows.size(); ++r) w.row(rows[r]) = wg.row(static_cast<Eigen::Index>(r));
      }
      std::vector<MolPtr> needed;
      for (auto& s : live) {
        if (s.st.type() == ActionType::connectivity) needed.insert(needed.end(), s.st.molecules().begin(), s.st.molecules().end());
      }
      ensure_cached(needed);

      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < live.size(); ++i) {
        Live& s = live[i];
        const MaskedLogits ml = candidate_logits(w.row(static_cast<Eigen::Index>(i)), s.st, &cat_emb);
        const std::size_t c = greedy ? nn::argmax_masked<double>(ml.logits, ml.mask)
                                     : nn::sample_masked<double>(ml.logits, ml.mask, s.pick);
        s.lp += std::log(nn::masked_softmax<double>(ml.logits, ml.mask)[c]);
        Action a = ml.candidates[c];
        if (a.kind == ActionKind::stop_intermediate) a.mol = oracle.predict(s.st.intermediate_inputs(), s.orc);
        if (a.kind == ActionKind::stop_final) a.mol = oracle.predict(s.st.final_inputs(), s.orc);
        s.st.apply(a);
        switch (a.kind) {
          case ActionKind::add_block: s.input = store_.at("act.h_B").value; break;
          case ActionKind::add_product: s.input = store_.at("act.h_P").value; break;
          case ActionKind::stop_intermediate: s.input = store_.at("act.h_STOPI").value; break;
          case ActionKind::block:
          case ActionKind::reactant: s.input = embed_molecule(a.mol); break;
          case ActionKind::stop_final: break;
        }
        if (s.st.finished()) {
          out[s.idx] = Decoded{s.st.to_dag(), s.st.history(), s.lp};
        } else {
          keep.push_back(i);
        }
      }
      if (keep.size() != live.size()) {
        std::vector<Live> next;
        next.reserve(keep.size());
        std::vector<int> rows(keep.begin(), keep.end());
        for (std::size_t i : keep) next.push_back(std::move(live[i]));
        live = std::move(next);
        for (auto& h : hidden) {
          M hn(static_cast<Eigen::Index>(rows.size()), h.cols());
          for (std::size_t r = 0; r < rows.size(); ++r) hn.row(static_cast<Eigen::Index>(r)) = h.row(rows[r]);
          h = std::move(hn);
        }
      }
    }
    return out;
  }

  Decoded sample_dag(const M& z, const Catalog& catalog, oracle::ReactionOracle& oracle, Rng& rng, int max_steps = -1) {
    return std::move(decode(z, 1, catalog, oracle, rng, false, max_steps).front());
  }

  Decoded greedy_decode(const M& z, const Catalog& catalog, oracle::ReactionOracle& oracle, Rng& rng, int max_steps = -1) {
    return std::move(decode(z, 1, catalog, oracle, rng, true, max_steps).front());
  }

  // ---- encoder --------------------------------------------------------------

  Posterior<T> encode(TapeT& t, std::span<const SynthesisDAG> dags) {
    TeacherPlan plan;
    for (const auto& d : dags) {
      for (const auto& node : d.nodes) plan.add_mol(node.mol);
    }
    std::vector<V> parts = {abstract(t, kTokB), abstract(t, kTokP), abstract(t, kTokStopI), abstract(t, kTokStopF),
                            embed(t, plan.mols)};
    return encode_with(t, dags, nn::concat_rows(parts), plan);
  }

  Posterior<T> encode_with(TapeT& t, std::span<const SynthesisDAG> dags, V tok, const TeacherPlan& plan) {
    if (cfg_.mode != Mode::ae) throw ConfigError("encode: model is not an autoencoder");
    if (dags.empty()) throw Error("encode: no dags");
    std::vector<int> node_tok;
    std::vector<int> finals;
    std::vector<Eigen::Triplet<T>> trip;
    int offset = 0;
    for (const auto& d : dags) {
      if (const auto v = dag::validate(d); !v.empty()) throw Error("encode: invalid dag: " + v.front().what);
      for (const auto& node : d.nodes) node_tok.push_back(plan.tok(node.mol));
      for (const auto& [from, to] : d.edges) trip.emplace_back(offset + to, offset + from, T(1));
      finals.push_back(offset + d.final_id);
      offset += static_cast<int>(d.nodes.size());
    }
    auto pred = std::make_shared<nn::SpMat<T>>(offset, offset);
    pred->setFromTriplets(trip.begin(), trip.end());
    std::shared_ptr<const nn::SpMat<T>> P = pred;
    V e = nn::gather_rows(tok, std::move(node_tok));
    for (int s = 0; s < cfg_.encoder_steps; ++s) {
      V m = nn::spmm(P, nn::apply_linear(t, store_, "enc.msg", e));
      e = nn::apply_gru(t, store_, "enc.gru", m, e);
    }
    V f = nn::gather_rows(e, std::move(finals));
    return {nn::apply_linear(t, store_, "enc.mu", f), nn::apply_linear(t, store_, "enc.logvar", f)};
  }

  // Posterior mean of each DAG, one row per DAG.
  M encode_mean(std::span<const SynthesisDAG> dags) {
    TapeT t(false);
    return encode(t, dags).mu.value();
  }

  // z = mu + sigma * eps with sigma = exp(logvar / 2) clamped to [1e-3, 10].
  V reparameterize(TapeT& t, const Posterior<T>& post, Rng& rng) {
    V sigma = nn::clamp(nn::exp(nn::scale(post.logvar, T(0.5))), T(1e-3), T(10));
    return nn::add(post.mu, nn::mul(sigma, t.constant(normal(rng, post.mu.rows()))));
  }

  M normal(Rng& rng, Eigen::Index rows) const {
    M e(rows, cfg_.latent_dim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = static_cast<T>(rng.normal());
    return e;
  }

  // nll = mean over the batch of -log p(seq | z), z from the reparameterized
  // posterior; penalty = lambda * MMD^2(z, prior draws).
  WaeParts<T> wae_loss(TapeT& t, std::span<const SynthesisDAG> dags, std::span<const ActionSeq> seqs,
                       const Catalog& catalog, Rng& rng, bool training, double lambda = -1) {
    if (lambda < 0) lambda = cfg_.mmd_lambda;
    if (dags.size() < 2 || dags.size() != seqs.size()) throw Error("wae_loss: need a batch of at least 2 dags with sequences");
    const TeacherPlan plan = plan_teacher(seqs, catalog, cfg_.max_steps, dags);
    V tok = token_table(t, plan);
    const Posterior<T> post = encode_with(t, dags, tok, plan);
    V z = reparameterize(t, post, rng);
    const T inv = static_cast<T>(1.0 / static_cast<double>(dags.size()));
    V nll = nn::scale(nll_with_tokens(t, plan, tok, z, training, rng), inv);
    V mmd = nn::mmd_imq(z, t.constant(normal(rng, z.rows())));
    WaeParts<T> out;
    out.nll = static_cast<double>(nll.scalar());
    out.mmd = static_cast<double>(mmd.scalar());
    out.loss = lambda == 0 ? nll : nn::add(nll, nn::scale(mmd, static_cast<T>(lambda)));
    return out;
  }

  // Mean -log p(seq) with z = 0 (gen mode objective).
  V gen_loss(TapeT& t, std::span<const ActionSeq> seqs, const Catalog& catalog, Rng& rng, bool training) {
    const TeacherPlan plan = plan_teacher(seqs, catalog, cfg_.max_steps);
    V z = t.constant(M::Zero(static_cast<Eigen::Index>(seqs.size()), cfg_.latent_dim));
    return nn::scale(nll_sum(t, plan, z, training, rng), static_cast<T>(1.0 / static_cast<double>(seqs.size())));
  }

 private:
  void init(Rng& rng) {
    const int D = cfg_.mol_dim;
    const int W = cfg_.context_width;
    nn::init_linear(store_, "mol.in", chem::kAtomFeatureDim, cfg_.atom_hidden, rng);
    nn::init_ggnn(store_, "mol.ggnn", cfg_.atom_hidden, rng);
    nn::init_gated_readout(store_, "mol.readout", cfg_.atom_hidden, D, rng);
    for (const char* n : {"act.h_B", "act.h_P", "act.h_STOPI", "act.h_STOPF"}) store_.get_or_init(n, 1, D, D, rng);
    for (int l = 0; l < cfg_.context_layers; ++l) {
      nn::init_linear(store_, "ctx.z" + std::to_string(l), cfg_.latent_dim, W, rng);
      nn::init_gru(store_, "ctx.gru" + std::to_string(l), l == 0 ? D : W, W, rng);
    }
    for (ActionType type : {ActionType::node_addition, ActionType::building_block, ActionType::connectivity}) {
      nn::init_mlp_relu_1h(store_, net_name(type), W, cfg_.action_hidden, D, rng);
    }
    if (cfg_.mode == Mode::ae) {
      nn::init_linear(store_, "enc.msg", D, D, rng);
      nn::init_gru(store_, "enc.gru", D, D, rng);
      nn::init_linear(store_, "enc.mu", D, cfg_.latent_dim, rng);
      const bool fresh = store_.find("enc.logvar.b") == nullptr;
      nn::init_linear(store_, "enc.logvar", D, cfg_.latent_dim, rng);
      // Start near sigma = 0.1 so z carries information from the first epoch.
      if (fresh) store_.at("enc.logvar.b").value.array() += static_cast<T>(2.0 * std::log(0.1));
    }
  }

  ModelConfig cfg_;
  nn::ParamStore<T> store_;
  std::unique_ptr<std::mutex> cache_mu_ = std::make_unique<std::mutex>();
  std::unordered_map<std::string, M> cache_;
};

}  // namespace synthdag::model
