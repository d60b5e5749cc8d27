#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"

namespace synthdag::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using SpMat = Eigen::SparseMatrix<T, Eigen::RowMajor>;

// Flat row-major tensor used at the I/O boundary.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

template <class T>
Tensor<T> to_tensor(const Mat<T>& m) {
  Tensor<T> t{{static_cast<int>(m.rows()), static_cast<int>(m.cols())}, {}};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

template <class T>
Mat<T> from_tensor(const Tensor<T>& t) {
  if (t.shape.size() != 2 || t.numel() != t.data.size()) throw ShapeError("tensor: expected a consistent 2-d shape");
  Mat<T> m(t.shape[0], t.shape[1]);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

// Named parameters with gradient buffers and Adam moments. Insertion order is
// preserved; names are unique.
template <class T>
class ParamStore {
 public:
  struct Param {
    std::string name;
    Mat<T> value;
    Mat<T> grad;
    Mat<T> m;
    Mat<T> v;
  };

  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Param& add(const std::string& name, Mat<T> value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->grad = Mat<T>::Zero(value.rows(), value.cols());
    p->m = Mat<T>::Zero(value.rows(), value.cols());
    p->v = Mat<T>::Zero(value.rows(), value.cols());
    p->value = std::move(value);
    index_.emplace(name, params_.size());
    params_.push_back(std::move(p));
    return *params_.back();
  }

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); existing entries are returned
  // unchanged after a shape check.
  Param& get_or_init(const std::string& name, int rows, int cols, int fan_in, Rng& rng) {
    if (Param* p = find(name)) {
      if (p->value.rows() != rows || p->value.cols() != cols) {
        throw ShapeError("parameter " + name + " has shape " + std::to_string(p->value.rows()) + "x" +
                         std::to_string(p->value.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
      }
      return *p;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat<T> v(rows, cols);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    return add(name, std::move(v));
  }

  Param* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  const Param* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  Param& at(const std::string& name) {
    if (Param* p = find(name)) return *p;
    throw ConfigError("unknown parameter " + name);
  }
  const Param& at(const std::string& name) const {
    if (const Param* p = find(name)) return *p;
    throw ConfigError("unknown parameter " + name);
  }

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) {
      auto& q = out.add(p->name, p->value.template cast<U>());
      q.m = p->m.template cast<U>();
      q.v = p->v.template cast<U>();
    }
    out.step = step;
    return out;
  }

  long step = 0;  // Adam step count

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace synthdag::nn
