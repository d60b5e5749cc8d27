#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "synthdag/oracle/oracle.hpp"

namespace synthdag::oracle {

class OracleError : public Error {
 public:
  using Error::Error;
};

enum class FailurePolicy { fail, fallback };

struct HttpOracleOptions {
  int timeout_ms = 10000;
  FailurePolicy on_error = FailurePolicy::fail;
  int max_in_flight = 4;
};

// Client for an external reaction predictor:
//   POST <endpoint>/react  {"reactants":[smiles...]}  ->  {"product":smiles}
// Answers are cached per normalized reactant key. An unparseable or missing
// product falls back to a random reactant; transport errors follow the
// configured policy.
class HttpOracle : public ReactionOracle {
 public:
  explicit HttpOracle(std::string endpoint, HttpOracleOptions opts = {})
      : opts_(opts), slots_(opts.max_in_flight > 0 ? opts.max_in_flight : 1) {
    while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
    const auto scheme = endpoint.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto path_start = endpoint.find('/', host_start);
    base_ = endpoint.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    if (base_.empty()) throw ConfigError("http oracle: empty endpoint");
  }

  MolPtr predict(std::span<const MolPtr> reactants, Rng& rng) override {
    if (reactants.empty()) throw Error("oracle: empty reactant set");
    const std::string key = reactant_key(reactants);
    {
      std::lock_guard lock(cache_mu_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        return it->second ? it->second : fallback_product(reactants, rng);
      }
    }

    std::string body;
    try {
      body = post(reactants);
    } catch (const OracleError&) {
      if (opts_.on_error == FailurePolicy::fail) throw;
      return fallback_product(reactants, rng);
    }

    MolPtr product;
    try {
      const auto j = nlohmann::json::parse(body);
      const std::string smi = j.at("product").get<std::string>();
      if (!smi.empty()) product = chem::make_molecule(smi);
    } catch (const std::exception&) {
      product = nullptr;
    }
    {
      std::lock_guard lock(cache_mu_);
      cache_.emplace(key, product);
    }
    return product ? product : fallback_product(reactants, rng);
  }

  bool deterministic() const override { return false; }
  bool remote() const override { return true; }

  std::size_t network_calls() const { return calls_.load(); }

 private:
  std::string post(std::span<const MolPtr> reactants) {
    nlohmann::json req;
    req["reactants"] = nlohmann::json::array();
    for (const auto& m : reactants) req["reactants"].push_back(m->smiles);

    acquire();
    struct Release {
      HttpOracle* self;
      ~Release() { self->release(); }
    } guard{this};
    ++calls_;
    httplib::Client cli(base_);
    const auto timeout = std::chrono::milliseconds(opts_.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(prefix_ + "/react", req.dump(), "application/json");
    if (!res) throw OracleError("http oracle: " + httplib::to_string(res.error()));
    if (res->status != 200) throw OracleError("http oracle: status " + std::to_string(res->status));
    return res->body;
  }

  void acquire() {
    std::unique_lock lock(slot_mu_);
    slot_cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }

  void release() {
    {
      std::lock_guard lock(slot_mu_);
      ++slots_;
    }
    slot_cv_.notify_one();
  }

  HttpOracleOptions opts_;
  std::string base_;
  std::string prefix_;
  std::mutex cache_mu_;
  std::unordered_map<std::string, MolPtr> cache_;  // null = invalid product
  std::atomic<std::size_t> calls_{0};
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int slots_;
};

}  // namespace synthdag::oracle
