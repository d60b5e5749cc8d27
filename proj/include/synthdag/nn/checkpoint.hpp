#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "synthdag/nn/param_store.hpp"

namespace synthdag::nn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json hyper = nlohmann::json::object();
  nlohmann::json model = nlohmann::json::object();
  ParamStore<float> store;
};

namespace detail {

inline nlohmann::json mat_json(const Mat<float>& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  auto& d = j["data"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) d.push_back(m.data()[i]);
  return j;
}

inline Mat<float> json_mat(const nlohmann::json& j, const std::string& what) {
  Tensor<float> t;
  try {
    t.shape = j.at("shape").get<std::vector<int>>();
    t.data = j.at("data").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: bad tensor " + what + ": " + e.what());
  }
  try {
    return from_tensor(t);
  } catch (const ShapeError& e) {
    throw IoError("checkpoint: tensor " + what + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const ParamStore<float>& store, const nlohmann::json& hyper,
                                      const nlohmann::json& model) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["hyper"] = hyper;
  j["model"] = model;
  auto& params = j["params"] = nlohmann::json::object();
  auto& m = j["adam"]["m"] = nlohmann::json::object();
  auto& v = j["adam"]["v"] = nlohmann::json::object();
  j["adam"]["step"] = store.step;
  j["order"] = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    j["order"].push_back(p.name);
    params[p.name] = detail::mat_json(p.value);
    m[p.name] = detail::mat_json(p.m);
    v[p.name] = detail::mat_json(p.v);
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", -1) != kCheckpointVersion) throw IoError("checkpoint: unsupported version");
  Checkpoint c;
  c.hyper = j.value("hyper", nlohmann::json::object());
  c.model = j.value("model", nlohmann::json::object());
  const auto& params = j.at("params");
  std::vector<std::string> order;
  if (j.contains("order")) {
    order = j["order"].get<std::vector<std::string>>();
  } else {
    for (auto it = params.begin(); it != params.end(); ++it) order.push_back(it.key());
  }
  const nlohmann::json adam = j.value("adam", nlohmann::json::object());
  for (const auto& name : order) {
    if (!params.contains(name)) throw IoError("checkpoint: missing parameter " + name);
    auto& p = c.store.add(name, detail::json_mat(params[name], name));
    if (adam.contains("m") && adam["m"].contains(name)) p.m = detail::json_mat(adam["m"][name], name + " (m)");
    if (adam.contains("v") && adam["v"].contains(name)) p.v = detail::json_mat(adam["v"][name], name + " (v)");
    if (p.m.rows() != p.value.rows() || p.m.cols() != p.value.cols() || p.v.rows() != p.value.rows() ||
        p.v.cols() != p.value.cols()) {
      throw IoError("checkpoint: moment shape differs for " + name);
    }
  }
  c.store.step = adam.value("step", 0L);
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamStore<float>& store,
                            const nlohmann::json& hyper = nlohmann::json::object(),
                            const nlohmann::json& model = nlohmann::json::object()) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    out << checkpoint_json(store, hyper, model).dump();
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace synthdag::nn
