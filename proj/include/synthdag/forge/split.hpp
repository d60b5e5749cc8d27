#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/core/error.hpp"
#include "synthdag/core/rng.hpp"
#include "synthdag/dag/synthesis_dag.hpp"

namespace synthdag::forge {

struct Split {
  std::vector<dag::SynthesisDAG> train, valid, test;
  std::vector<std::size_t> train_idx, valid_idx, test_idx;  // positions in the input
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{};
};

// Seeded shuffle, then round(n*f) items to train and valid; the rest is test.
inline Split split_corpus(const std::vector<dag::SynthesisDAG>& dags, std::array<double, 3> fractions,
                          std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split: fractions must lie in [0, 1]");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ConfigError("split: fractions must sum to 1");
  }
  const std::size_t n = dags.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto count = [n](double f) { return static_cast<std::size_t>(std::llround(static_cast<double>(n) * f)); };
  const std::size_t n_train = std::min(n, count(fractions[0]));
  const std::size_t n_valid = std::min(n - n_train, count(fractions[1]));

  Split s;
  s.seed = seed;
  s.fractions = fractions;
  for (std::size_t k = 0; k < n; ++k) {
    auto& idx = k < n_train ? s.train_idx : k < n_train + n_valid ? s.valid_idx : s.test_idx;
    idx.push_back(order[k]);
  }
  for (std::size_t i : s.train_idx) s.train.push_back(dags[i]);
  for (std::size_t i : s.valid_idx) s.valid.push_back(dags[i]);
  for (std::size_t i : s.test_idx) s.test.push_back(dags[i]);
  return s;
}

inline nlohmann::json split_manifest(const Split& s) {
  return {{"seed", s.seed},
          {"fractions", s.fractions},
          {"counts", {{"train", s.train.size()}, {"valid", s.valid.size()}, {"test", s.test.size()}}},
          {"train", s.train_idx},
          {"valid", s.valid_idx},
          {"test", s.test_idx}};
}

}  // namespace synthdag::forge
