#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthdag/chem/fingerprint.hpp"
#include "synthdag/chem/molecule.hpp"
#include "synthdag/dag/synthesis_dag.hpp"
#include "synthdag/forge/reactions.hpp"

namespace synthdag::eval {

struct SynthSummary {
  double mean_score = std::numeric_limits<double>::quiet_NaN();
  double median_steps = std::numeric_limits<double>::quiet_NaN();
};

struct SampleReport {
  std::size_t samples = 0;
  std::size_t valid = 0;
  std::size_t distinct = 0;
  std::size_t novel = 0;
  double validity = 0;
  double uniqueness = 0;
  double novelty = 0;
  SynthSummary synth;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"samples", samples},       {"valid", valid},           {"distinct", distinct},
                        {"novel", novel},           {"validity", validity},     {"uniqueness", uniqueness},
                        {"novelty", novelty}};
    if (!std::isnan(synth.mean_score)) j["synth_mean_score"] = synth.mean_score;
    if (!std::isnan(synth.median_steps)) j["median_steps"] = synth.median_steps;
    return j;
  }
};

// Canonical form of a SMILES string, or empty when it does not parse or
// breaks a valence rule.
inline std::string canonical_or_empty(const std::string& smiles) {
  try {
    return chem::make_molecule(smiles)->smiles;
  } catch (const Error&) {
    return {};
  }
}

// Uniqueness and novelty are over valid samples only; novelty counts distinct
// valid molecules absent from the training set.
inline SampleReport sample_metrics(const std::vector<std::string>& samples, const std::unordered_set<std::string>& train_canonical) {
  if (samples.empty()) throw Error("sample_metrics: no samples");
  SampleReport r;
  r.samples = samples.size();
  std::unordered_set<std::string> distinct;
  for (const auto& s : samples) {
    std::string c = canonical_or_empty(s);
    if (c.empty()) continue;
    ++r.valid;
    distinct.insert(std::move(c));
  }
  r.distinct = distinct.size();
  for (const auto& c : distinct) r.novel += train_canonical.count(c) ? 0 : 1;
  r.validity = static_cast<double>(r.valid) / static_cast<double>(r.samples);
  if (r.valid > 0) r.uniqueness = static_cast<double>(r.distinct) / static_cast<double>(r.valid);
  if (r.distinct > 0) r.novelty = static_cast<double>(r.novel) / static_cast<double>(r.distinct);
  return r;
}

inline std::unordered_set<std::string> final_products(const std::vector<dag::SynthesisDAG>& dags) {
  std::unordered_set<std::string> s;
  for (const auto& d : dags) s.insert(d.final_node().mol->smiles);
  return s;
}

// Reaction fingerprints of a reference corpus with exact linear-scan
// nearest-neighbour search.
class ReactionCorpusIndex {
 public:
  explicit ReactionCorpusIndex(int radius = 2, std::size_t width = 2048) : radius_(radius), width_(width) {}

  static ReactionCorpusIndex from_records(const std::vector<forge::ReactionRecord>& records, int radius = 2,
                                          std::size_t width = 2048) {
    ReactionCorpusIndex idx(radius, width);
    for (const auto& r : records) {
      if (r.products.size() != 1) continue;
      std::vector<const chem::MolGraph*> rs;
      for (const auto& m : r.reactants) rs.push_back(&m.mol->graph);
      idx.add(idx.fingerprint(rs, r.products[0].mol->graph));
    }
    return idx;
  }

  static ReactionCorpusIndex load(const std::string& path, int radius = 2, std::size_t width = 2048) {
    return from_records(forge::filter_reactions(forge::parse_reactions(path).records), radius, width);
  }

  chem::Fingerprint fingerprint(const std::vector<const chem::MolGraph*>& reactants, const chem::MolGraph& product) const {
    return chem::reaction_fingerprint(std::span<const chem::MolGraph* const>(reactants), product, radius_, width_);
  }

  void add(chem::Fingerprint fp) {
    if (fp.width() != width_) throw Error("reaction index: fingerprint width mismatch");
    fps_.push_back(std::move(fp));
  }

  std::size_t size() const { return fps_.size(); }
  bool empty() const { return fps_.empty(); }
  const std::vector<chem::Fingerprint>& fingerprints() const { return fps_; }

  double nearest_similarity(const chem::Fingerprint& q) const {
    if (fps_.empty()) throw Error("reaction index is empty");
    double best = 0.0;
    for (const auto& f : fps_) best = std::max(best, chem::tanimoto(q, f));
    return best;
  }

 private:
  int radius_;
  std::size_t width_;
  std::vector<chem::Fingerprint> fps_;
};

// Geometric mean; exactly 0 when any value is 0.
inline double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) throw Error("geometric mean of nothing");
  double log_sum = 0.0;
  for (double x : xs) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error("similarity outside [0, 1]");
    if (x == 0.0) return 0.0;
    log_sum += std::log(x);
  }
  return std::exp(log_sum / static_cast<double>(xs.size()));
}

// Nearest-neighbour similarity of every reaction (product node <- its
// parents) in the DAG, in node order.
inline std::vector<double> reaction_similarities(const dag::SynthesisDAG& d, const ReactionCorpusIndex& index) {
  const auto par = d.parents();
  std::vector<double> out;
  for (const auto& n : d.nodes) {
    if (n.kind != dag::NodeKind::product) continue;
    std::vector<const chem::MolGraph*> rs;
    for (int p : par[static_cast<std::size_t>(n.id)]) rs.push_back(&d.nodes[static_cast<std::size_t>(p)].mol->graph);
    if (rs.empty()) throw Error("synth_score: product node without reactants");
    out.push_back(index.nearest_similarity(index.fingerprint(rs, n.mol->graph)));
  }
  return out;
}

inline double synth_score(const dag::SynthesisDAG& d, const ReactionCorpusIndex& index) {
  if (d.num_products() == 0) throw Error("synth_score: the DAG has no reactions");
  return geometric_mean(reaction_similarities(d, index));
}

inline int step_count(const dag::SynthesisDAG& d) { return static_cast<int>(d.num_products()); }

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw Error("median of nothing");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

// Mean synth_score and median step count over DAGs with at least one
// reaction; fields stay NaN when there are none.
inline SynthSummary synth_summary(const std::vector<dag::SynthesisDAG>& dags, const ReactionCorpusIndex* index) {
  SynthSummary s;
  std::vector<double> steps, scores;
  for (const auto& d : dags) {
    if (d.num_products() == 0) continue;
    steps.push_back(step_count(d));
    if (index) scores.push_back(synth_score(d, *index));
  }
  if (!steps.empty()) s.median_steps = median(steps);
  if (!scores.empty()) {
    s.mean_score = 0;
    for (double x : scores) s.mean_score += x;
    s.mean_score /= static_cast<double>(scores.size());
  }
  return s;
}

}  // namespace synthdag::eval
