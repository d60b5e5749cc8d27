#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "synthdag/nn/tape.hpp"

namespace synthdag::nn {

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst;  // "param[index]"
  std::size_t checked = 0;
};

using LossFn = std::function<Var<double>(Tape<double>&, ParamStore<double>&)>;

// Compares tape gradients with central differences for every parameter
// entry (or every `stride`-th entry). Relative error is
// |a - n| / max(|a|, |n|, 1e-6), so near-zero gradients are compared
// absolutely.
inline GradCheckResult grad_check(const LossFn& f, ParamStore<double>& store, double eps = 1e-4,
                                  std::size_t stride = 1) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) throw ConfigError("grad_check: eps must lie in [1e-6, 1e-3]");
  store.zero_grad();
  {
    Tape<double> tape;
    tape.backward(f(tape, store));
  }
  GradCheckResult out;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    for (Eigen::Index k = 0; k < p.value.size(); ++k, ++flat) {
      if (flat % stride != 0) continue;
      double& x = p.value.data()[k];
      const double x0 = x;
      x = x0 + eps;
      double up, down;
      {
        Tape<double> t(false);
        up = f(t, store).scalar();
      }
      x = x0 - eps;
      {
        Tape<double> t(false);
        down = f(t, store).scalar();
      }
      x = x0;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p.grad.data()[k];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = p.name + "[" + std::to_string(k) + "]";
      }
    }
  }
  store.zero_grad();
  return out;
}

}  // namespace synthdag::nn
