#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "synthdag/dag/serialize.hpp"
#include "synthdag/model/dog_model.hpp"
#include "synthdag/nn/adam.hpp"
#include "synthdag/nn/checkpoint.hpp"

namespace synthdag::model {

struct EpochLog {
  int epoch = 0;
  std::string split;
  double nll = 0;
  double mmd = 0;
  double lr = 0;
};

struct TrainSchedule {
  int epochs = 1;
  int batch_size = 64;
  double lr = 1e-3;
  std::vector<int> milestones;  // epochs (0-based) from which lr is multiplied by lr_factor
  double lr_factor = 0.1;
  int checkpoint_every = 0;      // 0: final checkpoint only
  std::filesystem::path out_dir;  // empty: no files
  std::uint64_t seed = 0;
  std::function<void(const EpochLog&)> on_epoch;
  nlohmann::json meta;  // copied into every checkpoint's hyper section
};

inline void to_json(nlohmann::json& j, const TrainSchedule& s) {
  j = {{"epochs", s.epochs},     {"batch_size", s.batch_size}, {"lr", s.lr},  {"milestones", s.milestones},
       {"lr_factor", s.lr_factor}, {"checkpoint_every", s.checkpoint_every}, {"seed", s.seed}};
  if (!s.meta.is_null()) j["meta"] = s.meta;
}

inline std::string csv_row(const EpochLog& e) {
  std::ostringstream ss;
  ss.precision(9);
  ss << e.epoch << ',' << e.split << ',' << e.nll << ',' << e.mmd << ',' << e.lr;
  return ss.str();
}

template <class T>
void save_model(const std::filesystem::path& path, const DogModel<T>& m, const nlohmann::json& hyper = nlohmann::json::object()) {
  if constexpr (std::is_same_v<T, float>) {
    nn::save_checkpoint(path, m.params(), hyper, m.config());
  } else {
    nn::save_checkpoint(path, m.params().template cast<float>(), hyper, m.config());
  }
}

inline std::unique_ptr<DogModel<float>> load_model(const std::filesystem::path& path) {
  nn::Checkpoint c = nn::load_checkpoint(path);
  const ModelConfig cfg = c.model.get<ModelConfig>();
  return std::make_unique<DogModel<float>>(cfg, std::move(c.store));
}

// Splits [0, n) into consecutive batches; a trailing batch smaller than
// `min_size` is merged into the previous one.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size, std::size_t min_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += size) out.emplace_back(b, std::min(n, b + size));
  if (out.size() > 1 && out.back().second - out.back().first < min_size) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

template <class T>
struct EpochTotals {
  double nll = 0;
  double mmd = 0;
  std::size_t n = 0;
};

// One pass over `dags` (serialized afresh with `ser`). Updates the weights
// when `update` is set.
template <class T>
EpochTotals<T> run_epoch(DogModel<T>& model, std::span<const SynthesisDAG> dags, const Catalog& catalog, Rng& ser, Rng& noise,
                         std::size_t batch_size, bool update, const nn::AdamOptions& adam) {
  std::vector<ActionSeq> seqs;
  seqs.reserve(dags.size());
  for (const auto& d : dags) seqs.push_back(dag::serialize(d, ser));
  const bool ae = model.config().mode == Mode::ae;
  EpochTotals<T> tot;
  for (auto [b, e] : batch_ranges(dags.size(), batch_size, ae ? 2 : 1)) {
    const std::span<const SynthesisDAG> bd = dags.subspan(b, e - b);
    const std::span<const ActionSeq> bs(seqs.data() + b, e - b);
    nn::Tape<T> t(update);
    nn::Var<T> loss;
    if (ae) {
      WaeParts<T> w = model.wae_loss(t, bd, bs, catalog, noise, update);
      loss = w.loss;
      tot.nll += w.nll * static_cast<double>(e - b);
      tot.mmd += w.mmd * static_cast<double>(e - b);
    } else {
      loss = model.gen_loss(t, bs, catalog, noise, update);
      tot.nll += static_cast<double>(loss.scalar()) * static_cast<double>(e - b);
    }
    tot.n += e - b;
    if (update) {
      model.params().zero_grad();
      t.backward(loss);
      nn::adam_step(model.params(), adam);
      model.invalidate_cache();
    }
  }
  return tot;
}

// Adam on mean -log p (gen) or the WAE objective (ae). Each epoch serializes
// every DAG with a fresh seed derived from the schedule seed and the epoch.
template <class T>
std::vector<EpochLog> train(DogModel<T>& model, std::vector<SynthesisDAG> corpus, const std::vector<SynthesisDAG>& valid,
                            const Catalog& catalog, const TrainSchedule& sched) {
  if (corpus.empty()) throw Error("train: empty corpus");
  if (sched.epochs < 0 || sched.batch_size <= 0) throw ConfigError("train: bad schedule");
  if (model.config().mode == Mode::ae && corpus.size() < 2) throw Error("train: the autoencoder needs at least 2 dags");
  std::ofstream csv;
  if (!sched.out_dir.empty()) {
    std::filesystem::create_directories(sched.out_dir);
    csv.open(sched.out_dir / "train_log.csv");
    if (!csv) throw IoError("cannot write " + (sched.out_dir / "train_log.csv").string());
    csv << "epoch,split,nll,mmd,lr\n";
  }
  const Rng root(sched.seed);
  const nlohmann::json hyper = sched;
  std::vector<EpochLog> log;
  auto emit = [&](EpochLog e) {
    if (csv.is_open()) csv << csv_row(e) << '\n' << std::flush;
    if (sched.on_epoch) sched.on_epoch(e);
    log.push_back(std::move(e));
  };
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    nn::AdamOptions adam;
    adam.lr = nn::scheduled_lr(sched.lr, sched.milestones, sched.lr_factor, epoch);
    Rng shuf = root.child("shuffle", static_cast<std::uint64_t>(epoch));
    shuf.shuffle(corpus);
    Rng ser = root.child("serialize", static_cast<std::uint64_t>(epoch));
    Rng noise = root.child("noise", static_cast<std::uint64_t>(epoch));
    const auto tr = run_epoch(model, std::span<const SynthesisDAG>(corpus), catalog, ser, noise,
                              static_cast<std::size_t>(sched.batch_size), true, adam);
    emit({epoch, "train", tr.nll / static_cast<double>(tr.n), tr.mmd / static_cast<double>(tr.n), adam.lr});
    if (valid.size() >= (model.config().mode == Mode::ae ? 2U : 1U)) {
      Rng vser = root.child("valid-serialize", static_cast<std::uint64_t>(epoch));
      Rng vnoise = root.child("valid-noise", static_cast<std::uint64_t>(epoch));
      const auto va = run_epoch(model, std::span<const SynthesisDAG>(valid), catalog, vser, vnoise,
                                static_cast<std::size_t>(sched.batch_size), false, adam);
      emit({epoch, "valid", va.nll / static_cast<double>(va.n), va.mmd / static_cast<double>(va.n), adam.lr});
    }
    if (!sched.out_dir.empty() && sched.checkpoint_every > 0 && (epoch + 1) % sched.checkpoint_every == 0) {
      save_model(sched.out_dir / ("checkpoint_epoch" + std::to_string(epoch + 1) + ".json"), model, hyper);
    }
  }
  if (!sched.out_dir.empty()) save_model(sched.out_dir / "checkpoint.json", model, hyper);
  return log;
}

}  // namespace synthdag::model
