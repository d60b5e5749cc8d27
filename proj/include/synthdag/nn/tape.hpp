#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>

#include "synthdag/nn/param_store.hpp"

namespace synthdag::nn {

template <class T>
class Tape;

template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Mat<T>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  T scalar() const {
    if (rows() != 1 || cols() != 1) throw ShapeError("scalar() on a non-scalar");
    return value()(0, 0);
  }
};

// Reverse-mode tape. Every op pushes one node holding its value and, when
// recording and some input needs a gradient, a closure that pushes the
// node's gradient to its inputs.
template <class T>
class Tape {
 public:
  using M = Mat<T>;
  using Back = std::function<void(Tape&, const M&)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(M value) { return push(std::move(value), false, nullptr, "constant"); }

  // Leaf reading a stored parameter; one leaf per parameter per tape.
  Var<T> param(typename ParamStore<T>::Param& p) {
    if (auto it = leaves_.find(&p); it != leaves_.end()) return {this, it->second};
    Node n;
    n.ref = &p.value;
    n.param = &p;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    leaves_.emplace(&p, id);
    return {this, id};
  }

  const M& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  bool needs_grad(Var<T> v) const { return needs_grad(v.id); }

  template <class... Vs>
  bool any_needs(Vs... vs) const {
    return record_ && (needs_grad(vs.id) || ...);
  }

  Var<T> push(M value, bool requires_grad, Back back, const char* op) {
    if (!value.allFinite()) throw NumericError(std::string("non-finite value produced by ") + op);
    Node n;
    n.value = std::move(value);
    n.requires_grad = record_ && requires_grad;
    if (n.requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  template <class E>
  void accumulate(int id, const E& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  // Gradient of a 1x1 loss. Parameter gradients are added to the store's
  // grad buffers.
  void backward(Var<T> loss, T seed = T(1)) {
    if (!record_) throw Error("backward on a non-recording tape");
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward needs a scalar loss");
    accumulate(loss.id, M::Constant(1, 1, seed));
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.has_grad) continue;
      if (n.back) n.back(*this, n.grad);
      if (n.param) n.param->grad += n.grad;
    }
  }

  const M* grad(Var<T> v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.has_grad ? &n.grad : nullptr;
  }

 private:
  struct Node {
    M value;
    M grad;
    const M* ref = nullptr;
    typename ParamStore<T>::Param* param = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
    Back back;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<const void*, int> leaves_;
};

}  // namespace synthdag::nn
