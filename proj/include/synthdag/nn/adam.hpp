#pragma once

#include <cmath>

#include "synthdag/nn/param_store.hpp"

namespace synthdag::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update from the gradients held in the store.
// Gradients are left in place; callers zero them.
template <class T>
void adam_step(ParamStore<T>& store, const AdamOptions& opt) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() || p.m.rows() != p.value.rows() ||
        p.m.cols() != p.value.cols() || p.v.rows() != p.value.rows() || p.v.cols() != p.value.cols()) {
      throw ShapeError("adam: gradient or moment shape differs from parameter " + p.name);
    }
  }
  ++store.step;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double g = static_cast<double>(p.grad.data()[k]);
      const double m = opt.beta1 * static_cast<double>(p.m.data()[k]) + (1.0 - opt.beta1) * g;
      const double v = opt.beta2 * static_cast<double>(p.v.data()[k]) + (1.0 - opt.beta2) * g * g;
      p.m.data()[k] = static_cast<T>(m);
      p.v.data()[k] = static_cast<T>(v);
      const double step = opt.lr * (m / c1) / (std::sqrt(v / c2) + opt.eps);
      p.value.data()[k] = static_cast<T>(static_cast<double>(p.value.data()[k]) - step);
    }
  }
}

// Piecewise-constant schedule: base * factor^(number of milestones <= epoch).
inline double scheduled_lr(double base, const std::vector<int>& milestones, double factor, int epoch) {
  double lr = base;
  for (int m : milestones) {
    if (epoch >= m) lr *= factor;
  }
  return lr;
}

}  // namespace synthdag::nn
