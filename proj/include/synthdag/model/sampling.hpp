#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "synthdag/model/dog_model.hpp"

namespace synthdag::model {

struct SampleOptions {
  std::size_t n = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t chunk = 100;  // rows per decode batch
  bool greedy = false;
  int max_steps = -1;
};

// Draws n DAGs from the prior (gen mode: no latent). Row i always uses the
// streams keyed by (seed, i), so the output does not depend on `workers` or
// `chunk`.
template <class T>
std::vector<Decoded> sample_many(DogModel<T>& model, const Catalog& catalog, oracle::ReactionOracle& oracle,
                                 const SampleOptions& o) {
  if (o.workers < 1 || o.chunk == 0) throw ConfigError("sample: workers and chunk must be positive");
  std::vector<Decoded> out(o.n);
  const std::size_t chunks = (o.n + o.chunk - 1) / o.chunk;
  const int latent = model.config().mode == Mode::ae ? model.config().latent_dim : 0;
  Rng zrng = Rng(o.seed).child("prior");
  nn::Mat<T> z;
  if (latent > 0) z = model.normal(zrng, static_cast<Eigen::Index>(o.n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t b = c * o.chunk;
      const std::size_t e = std::min(o.n, b + o.chunk);
      try {
        nn::Mat<T> zc;
        if (latent > 0) zc = z.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
        auto part = model.decode_seeded(zc, e - b, catalog, oracle, o.seed, b, o.greedy, o.max_steps);
        std::move(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(b));
      } catch (...) {
        std::lock_guard lock(fail_mu);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  // The embedding cache is filled once up front so workers mostly read it.
  model.ensure_cached(catalog.blocks());
  const int threads = std::min<int>(o.workers, static_cast<int>(std::max<std::size_t>(chunks, 1)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace synthdag::model
