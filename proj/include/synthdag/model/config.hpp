#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/core/error.hpp"
#include "synthdag/dag/decode_state.hpp"

namespace synthdag::model {

enum class Mode { gen, ae };

inline const char* to_string(Mode m) { return m == Mode::gen ? "gen" : "ae"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "gen") return Mode::gen;
  if (s == "ae") return Mode::ae;
  throw ConfigError("unknown model mode '" + s + "'");
}

struct ModelConfig {
  Mode mode = Mode::gen;
  int ggnn_steps = 5;
  int atom_hidden = 80;
  int mol_dim = 160;
  int action_embed_dim = 160;  // must equal mol_dim
  int context_layers = 3;
  int context_width = 512;
  int action_hidden = 28;
  int latent_dim = 25;
  int encoder_steps = 7;
  double dropout = 0.1;
  double mmd_lambda = 10.0;
  int max_steps = dag::kDefaultMaxSteps;

  static ModelConfig gen_defaults() { return ModelConfig{}; }

  static ModelConfig ae_defaults() {
    ModelConfig c;
    c.mode = Mode::ae;
    c.ggnn_steps = 4;
    c.atom_hidden = 80;
    c.mol_dim = 50;
    c.action_embed_dim = 50;
    c.context_width = 200;
    return c;
  }

  void validate() const {
    auto pos = [](int v, const char* what) {
      if (v <= 0) throw ConfigError(std::string("model config: ") + what + " must be positive");
    };
    pos(atom_hidden, "atom_hidden");
    pos(mol_dim, "mol_dim");
    pos(context_layers, "context_layers");
    pos(context_width, "context_width");
    pos(action_hidden, "action_hidden");
    pos(latent_dim, "latent_dim");
    if (ggnn_steps < 0 || encoder_steps < 0) throw ConfigError("model config: negative propagation steps");
    if (action_embed_dim != mol_dim) throw ConfigError("model config: action_embed_dim must equal mol_dim");
    if (dropout < 0 || dropout >= 1) throw ConfigError("model config: dropout must lie in [0, 1)");
    if (mmd_lambda < 0) throw ConfigError("model config: mmd_lambda must be non-negative");
    if (max_steps < dag::kMinSteps) throw ConfigError("model config: max_steps below 4");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"mode", to_string(c.mode)},
       {"ggnn_steps", c.ggnn_steps},
       {"atom_hidden", c.atom_hidden},
       {"mol_dim", c.mol_dim},
       {"action_embed_dim", c.action_embed_dim},
       {"context_layers", c.context_layers},
       {"context_width", c.context_width},
       {"action_hidden", c.action_hidden},
       {"latent_dim", c.latent_dim},
       {"encoder_steps", c.encoder_steps},
       {"dropout", c.dropout},
       {"mmd_lambda", c.mmd_lambda},
       {"max_steps", c.max_steps},
       {"z_init", "per_layer_linear"}};
}

// Missing keys fall back to the defaults of the given mode.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  const Mode mode = parse_mode(j.value("mode", std::string("gen")));
  c = mode == Mode::ae ? ModelConfig::ae_defaults() : ModelConfig::gen_defaults();
  c.ggnn_steps = j.value("ggnn_steps", c.ggnn_steps);
  c.atom_hidden = j.value("atom_hidden", c.atom_hidden);
  c.mol_dim = j.value("mol_dim", c.mol_dim);
  c.action_embed_dim = j.value("action_embed_dim", c.mol_dim);
  c.context_layers = j.value("context_layers", c.context_layers);
  c.context_width = j.value("context_width", c.context_width);
  c.action_hidden = j.value("action_hidden", c.action_hidden);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.encoder_steps = j.value("encoder_steps", c.encoder_steps);
  c.dropout = j.value("dropout", c.dropout);
  c.mmd_lambda = j.value("mmd_lambda", c.mmd_lambda);
  c.max_steps = j.value("max_steps", c.max_steps);
}

}  // namespace synthdag::model
