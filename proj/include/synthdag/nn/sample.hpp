#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"

namespace synthdag::nn {

// Softmax over the unmasked entries, computed in double. Masked entries get
// exactly 0.
template <class T>
std::vector<double> masked_softmax(std::span<const T> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ShapeError("masked_softmax: mask size");
  double mx = -INFINITY;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j]) mx = std::max(mx, static_cast<double>(logits[j]));
  }
  if (mx == -INFINITY) throw Error("masked_softmax: every entry is masked");
  std::vector<double> p(logits.size(), 0.0);
  double s = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j]) s += (p[j] = std::exp(static_cast<double>(logits[j]) - mx));
  }
  for (double& v : p) v /= s;
  return p;
}

template <class T>
std::size_t sample_masked(std::span<const T> logits, std::span<const std::uint8_t> mask, Rng& rng) {
  const std::vector<double> p = masked_softmax(logits, mask);
  const double u = rng.uniform();
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!mask[j]) continue;
    last = j;
    acc += p[j];
    if (u < acc) return j;
  }
  return last;
}

// First maximum among the unmasked entries.
template <class T>
std::size_t argmax_masked(std::span<const T> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ShapeError("argmax_masked: mask size");
  std::size_t best = logits.size();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j] && (best == logits.size() || logits[j] > logits[best])) best = j;
  }
  if (best == logits.size()) throw Error("argmax_masked: every entry is masked");
  return best;
}

}  // namespace synthdag::nn
