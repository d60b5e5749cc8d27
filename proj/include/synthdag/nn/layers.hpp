#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "synthdag/nn/ops.hpp"

namespace synthdag::nn {

// Parameter naming: a layer called "x" owns "x.W", "x.b" (linear),
// "x.Wx", "x.Wh", "x.bx", "x.bh" (recurrent cell) and so on.

template <class T>
void init_linear(ParamStore<T>& s, const std::string& name, int in, int out, Rng& rng, bool bias = true) {
  s.get_or_init(name + ".W", in, out, in, rng);
  if (bias) s.get_or_init(name + ".b", 1, out, in, rng);
}

template <class T>
Var<T> apply_linear(Tape<T>& t, ParamStore<T>& s, const std::string& name, Var<T> x) {
  Var<T> w = t.param(s.at(name + ".W"));
  if (auto* b = s.find(name + ".b")) return linear(x, w, t.param(*b));
  return matmul(x, w);
}

template <class T>
void init_gru(ParamStore<T>& s, const std::string& name, int in, int hidden, Rng& rng) {
  s.get_or_init(name + ".Wx", in, 3 * hidden, in, rng);
  s.get_or_init(name + ".Wh", hidden, 3 * hidden, hidden, rng);
  s.get_or_init(name + ".bx", 1, 3 * hidden, in, rng);
  s.get_or_init(name + ".bh", 1, 3 * hidden, hidden, rng);
}

template <class T>
Var<T> apply_gru(Tape<T>& t, ParamStore<T>& s, const std::string& name, Var<T> x, Var<T> h) {
  return gru_cell(x, h, t.param(s.at(name + ".Wx")), t.param(s.at(name + ".Wh")), t.param(s.at(name + ".bx")),
                  t.param(s.at(name + ".bh")));
}

template <class T>
void init_mlp_relu_1h(ParamStore<T>& s, const std::string& name, int in, int hidden, int out, Rng& rng) {
  init_linear(s, name + ".l1", in, hidden, rng);
  init_linear(s, name + ".l2", hidden, out, rng);
}

template <class T>
Var<T> mlp_relu_1h(Tape<T>& t, ParamStore<T>& s, const std::string& name, Var<T> x) {
  return apply_linear(t, s, name + ".l2", relu(apply_linear(t, s, name + ".l1", x)));
}

inline constexpr int kEdgeTypes = 4;

template <class T>
using Adjacency = std::array<std::shared_ptr<const SpMat<T>>, kEdgeTypes>;

template <class T>
void init_ggnn(ParamStore<T>& s, const std::string& name, int hidden, Rng& rng) {
  for (int e = 0; e < kEdgeTypes; ++e) s.get_or_init(name + ".msg" + std::to_string(e), hidden, hidden, hidden, rng);
  init_gru(s, name + ".gru", hidden, hidden, rng);
}

// T rounds of: per-edge-type linear message, summed over neighbours, then a
// recurrent update of every node state. adj[e](i, j) = 1 when j sends to i.
template <class T>
Var<T> ggnn_propagate(Tape<T>& t, ParamStore<T>& s, const std::string& name, Var<T> h, const Adjacency<T>& adj,
                      int steps) {
  if (steps < 0) throw ConfigError("ggnn_propagate: negative step count");
  for (const auto& a : adj) {
    if (!a || a->rows() != h.rows() || a->cols() != h.rows()) throw ShapeError("ggnn_propagate: adjacency size");
  }
  for (int k = 0; k < steps; ++k) {
    Var<T> m{};
    bool first = true;
    for (int e = 0; e < kEdgeTypes; ++e) {
      if (adj[static_cast<std::size_t>(e)]->nonZeros() == 0) continue;
      Var<T> me = spmm(adj[static_cast<std::size_t>(e)], matmul(h, t.param(s.at(name + ".msg" + std::to_string(e)))));
      m = first ? me : add(m, me);
      first = false;
    }
    if (first) m = t.constant(Mat<T>::Zero(h.rows(), h.cols()));
    h = apply_gru(t, s, name + ".gru", m, h);
  }
  return h;
}

template <class T>
void init_gated_readout(ParamStore<T>& s, const std::string& name, int hidden, int out, Rng& rng) {
  init_linear(s, name + ".gate", hidden, out, rng);
  init_linear(s, name + ".value", hidden, out, rng);
}

// Per graph g: sum over its nodes of sigmoid(gate(h)) * tanh(value(h)).
// segment(g, i) = 1 when node i belongs to graph g.
template <class T>
Var<T> gated_readout(Tape<T>& t, ParamStore<T>& s, const std::string& name, Var<T> h,
                     std::shared_ptr<const SpMat<T>> segment) {
  if (h.rows() == 0) throw ShapeError("gated_readout: empty graph");
  Var<T> g = mul(sigmoid(apply_linear(t, s, name + ".gate", h)), tanh(apply_linear(t, s, name + ".value", h)));
  return spmm(std::move(segment), g);
}

template <class T>
std::shared_ptr<const SpMat<T>> single_segment(Eigen::Index nodes) {
  auto m = std::make_shared<SpMat<T>>(1, nodes);
  std::vector<Eigen::Triplet<T>> trip;
  for (Eigen::Index i = 0; i < nodes; ++i) trip.emplace_back(0, static_cast<int>(i), T(1));
  m->setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace synthdag::nn
