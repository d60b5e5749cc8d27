#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "synthdag/chem/fingerprint.hpp"
#include "synthdag/chem/molecule.hpp"
#include "synthdag/core/error.hpp"

namespace synthdag::finetune {

// Scalar score of a final product; higher is better.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double score(const chem::MolGraph& mol) = 0;
  virtual std::string name() const = 0;

  virtual std::vector<double> score_batch(const std::vector<chem::MolPtr>& mols) {
    std::vector<double> out;
    out.reserve(mols.size());
    for (const auto& m : mols) out.push_back(score(m->graph));
    return out;
  }
};

class TanimotoToTarget : public Objective {
 public:
  explicit TanimotoToTarget(const std::string& smiles)
      : target_(chem::make_molecule(smiles)), fp_(chem::morgan_fingerprint(target_->graph, 2)) {}

  double score(const chem::MolGraph& mol) override { return chem::tanimoto(chem::morgan_fingerprint(mol, 2), fp_); }
  std::string name() const override { return "tanimoto:" + target_->smiles; }
  const std::string& target() const { return target_->smiles; }

 private:
  chem::MolPtr target_;
  chem::Fingerprint fp_;
};

inline int heavy_atom_count(const chem::MolGraph& g) {
  return static_cast<int>(std::count_if(g.atoms().begin(), g.atoms().end(), [](const chem::Atom& a) { return a.element != 1; }));
}

class HeavyAtomTarget : public Objective {
 public:
  explicit HeavyAtomTarget(int n) : n_(n) {
    if (n < 1) throw ConfigError("heavy_atoms objective needs a positive count");
  }
  double score(const chem::MolGraph& mol) override {
    const double d = std::abs(heavy_atom_count(mol) - n_) / static_cast<double>(n_);
    return std::clamp(1.0 - d, 0.0, 1.0);
  }
  std::string name() const override { return "heavy_atoms:" + std::to_string(n_); }

 private:
  int n_;
};

class ContainsRing : public Objective {
 public:
  explicit ContainsRing(int size) : size_(size) {
    if (size < 3) throw ConfigError("ring objective needs a size of at least 3");
  }
  double score(const chem::MolGraph& mol) override { return chem::has_ring_of_size(mol, size_) ? 1.0 : 0.0; }
  std::string name() const override { return "ring:" + std::to_string(size_); }

 private:
  int size_;
};

// Runs `cmd` with one SMILES per line on its standard input and reads one
// number per line from its standard output.
class ExternalCommand : public Objective {
 public:
  explicit ExternalCommand(std::string cmd) : cmd_(std::move(cmd)) {
    if (cmd_.empty()) throw ConfigError("cmd objective needs a command");
  }

  double score(const chem::MolGraph& mol) override {
    return run({chem::canonical_smiles(mol)}).front();
  }

  std::vector<double> score_batch(const std::vector<chem::MolPtr>& mols) override {
    std::vector<std::string> smiles;
    for (const auto& m : mols) smiles.push_back(m->smiles);
    return run(smiles);
  }

  std::string name() const override { return "cmd:" + cmd_; }

 private:
  std::vector<double> run(const std::vector<std::string>& smiles) {
    if (smiles.empty()) return {};
    const auto input = std::filesystem::temp_directory_path() /
                       ("synthdag_objective_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
                        std::to_string(++calls_) + ".smi");
    {
      std::ofstream out(input);
      if (!out) throw IoError("cannot write " + input.string());
      for (const auto& s : smiles) out << s << '\n';
    }
    const std::string line = cmd_ + " < '" + input.string() + "'";
    FILE* pipe = ::popen(line.c_str(), "r");
    if (!pipe) {
      std::filesystem::remove(input);
      throw IoError("cannot start objective command: " + cmd_);
    }
    std::string text;
    char buf[4096];
    while (std::size_t k = std::fread(buf, 1, sizeof buf, pipe)) text.append(buf, k);
    const int status = ::pclose(pipe);
    std::filesystem::remove(input);
    if (status != 0) throw Error("objective command exited with status " + std::to_string(status) + ": " + cmd_);

    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string tok = text.substr(pos, end - pos);
      pos = end + 1;
      if (!tok.empty() && tok.back() == '\r') tok.pop_back();
      if (tok.empty()) continue;
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) throw Error("objective command printed a non-number: '" + tok + "'");
      out.push_back(v);
    }
    if (out.size() != smiles.size()) {
      throw Error("objective command printed " + std::to_string(out.size()) + " scores for " +
                  std::to_string(smiles.size()) + " molecules");
    }
    return out;
  }

  std::string cmd_;
  std::size_t calls_ = 0;
};

// "tanimoto:SMILES", "heavy_atoms:N", "ring:N" or "cmd:PATH".
inline std::unique_ptr<Objective> parse_objective(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("objective must look like name:args, got '" + spec + "'");
  const std::string name = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("objective " + name + " needs an integer, got '" + s + "'");
    return v;
  };
  if (name == "tanimoto") return std::make_unique<TanimotoToTarget>(arg);
  if (name == "heavy_atoms") return std::make_unique<HeavyAtomTarget>(to_int(arg));
  if (name == "ring") return std::make_unique<ContainsRing>(to_int(arg));
  if (name == "cmd") return std::make_unique<ExternalCommand>(arg);
  throw ConfigError("unknown objective '" + name + "'");
}

}  // namespace synthdag::finetune
