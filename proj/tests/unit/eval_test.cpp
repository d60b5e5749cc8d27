#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/dag_util.hpp"
#include "synthdag/eval/metrics.hpp"

namespace synthdag::eval {
namespace {

using namespace synthdag::testing;

TEST(SampleMetrics, Definitions) {
  const SampleReport r = sample_metrics({"CCO", "OCC", "c1ccccc1"}, {"CCO"});
  EXPECT_EQ(r.validity, 1.0);
  EXPECT_EQ(r.uniqueness, 2.0 / 3.0);
  EXPECT_EQ(r.novelty, 1.0 / 2.0);

  const SampleReport same = sample_metrics({"CC", "CC", "CC", "CC"}, {"CC"});
  EXPECT_EQ(same.uniqueness, 0.25);
  EXPECT_EQ(same.novelty, 0.0);

  const SampleReport bad = sample_metrics({"CC", "C(C", "C(C)(C)(C)(C)C", "CC"}, {});
  EXPECT_EQ(bad.validity, 0.5);
  EXPECT_EQ(bad.uniqueness, 0.5);
  EXPECT_EQ(bad.novelty, 1.0);

  const SampleReport none = sample_metrics({"xx"}, {});
  EXPECT_EQ(none.validity, 0.0);
  EXPECT_EQ(none.uniqueness, 0.0);
  EXPECT_THROW(sample_metrics({}, {}), Error);
}

TEST(SampleMetrics, FractionsStayInRange) {
  Rng rng(1);
  const std::vector<std::string> pool = {"CC", "CCO", "c1ccccc1", "C(C", "N", "CN", "O=C=O", "Q"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> s;
    std::unordered_set<std::string> train;
    for (std::size_t i = 0, n = 1 + rng.index(12); i < n; ++i) s.push_back(pool[rng.index(pool.size())]);
    for (std::size_t i = 0, n = rng.index(4); i < n; ++i) train.insert(canonical_or_empty(pool[rng.index(5)]));
    const auto r = sample_metrics(s, train);
    for (double f : {r.validity, r.uniqueness, r.novelty}) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
    EXPECT_LE(r.novel, r.distinct);
    EXPECT_LE(r.distinct, r.valid);
  }
}

const std::vector<ToyReaction> kCorpus = {
    {{"CC(=O)Cl", "Oc1ccccc1"}, "CC(=O)Oc1ccccc1"},
    {{"CCO", "CC(=O)O"}, "CCOC(C)=O"},
    {{"Nc1ccccc1", "CC(=O)Cl"}, "CC(=O)Nc1ccccc1"},
    {{"CCBr", "Oc1ccccc1"}, "CCOc1ccccc1"},
    {{"O=C(O)c1ccccc1", "CO"}, "COC(=O)c1ccccc1"},
};

ReactionCorpusIndex corpus_index() {
  ReactionCorpusIndex idx;
  for (const auto& r : kCorpus) {
    std::vector<chem::MolPtr> ms;
    std::vector<const chem::MolGraph*> gs;
    for (const auto& s : r.reactants) ms.push_back(chem::make_molecule(s));
    for (const auto& m : ms) gs.push_back(&m->graph);
    idx.add(idx.fingerprint(gs, chem::make_molecule(r.product)->graph));
  }
  return idx;
}

TEST(SynthScore, VerbatimCorpusReactionsScoreExactlyOne) {
  const auto idx = corpus_index();
  const auto single = make_dag({{"CC(=O)Cl", true}, {"Oc1ccccc1", true}, {"CC(=O)Oc1ccccc1", false}}, {{0, 2}, {1, 2}}, 2);
  EXPECT_EQ(synth_score(single, idx), 1.0);
  const auto both = make_dag({{"CC(=O)Cl", true}, {"Oc1ccccc1", true}, {"CCBr", true}, {"CC(=O)Oc1ccccc1", false},
                              {"CCOc1ccccc1", false}, {"CCOc1ccccc1.CC(=O)Oc1ccccc1", false}},
                             {{0, 3}, {1, 3}, {1, 4}, {2, 4}, {3, 5}, {4, 5}}, 5);
  const auto k = reaction_similarities(both, idx);
  ASSERT_EQ(k.size(), 3U);
  EXPECT_EQ(k[0], 1.0);
  EXPECT_EQ(k[1], 1.0);
  EXPECT_EQ(step_count(single), 1);
  EXPECT_EQ(step_count(paracetamol_dag()), 3);
  EXPECT_THROW(synth_score(make_dag({{"CC", true}}, {}, 0), idx), Error);
  EXPECT_THROW(ReactionCorpusIndex().nearest_similarity(chem::Fingerprint()), Error);
}

TEST(SynthScore, GeometricMeanOfTwoReactions) {
  EXPECT_NEAR(geometric_mean({0.25, 1.0}), 0.5, 1e-9);
  EXPECT_EQ(geometric_mean({1.0, 1.0, 1.0}), 1.0);
  EXPECT_EQ(geometric_mean({0.3, 0.0}), 0.0);

  // A DAG with two reactions; the corpus holds the first verbatim and a
  // fingerprint at Tanimoto exactly 1/4 from the second.
  const auto d = make_dag({{"CCO", true}, {"CC(=O)O", true}, {"CCN", true}, {"CCOC(C)=O", false}, {"CCNCCOC(C)=O", false}},
                          {{0, 3}, {1, 3}, {2, 4}, {3, 4}}, 4);
  ReactionCorpusIndex probe;
  const auto par = d.parents();
  std::vector<chem::Fingerprint> fps;
  for (int node : {3, 4}) {
    std::vector<const chem::MolGraph*> gs;
    for (int p : par[static_cast<std::size_t>(node)]) gs.push_back(&d.nodes[static_cast<std::size_t>(p)].mol->graph);
    fps.push_back(probe.fingerprint(gs, d.nodes[static_cast<std::size_t>(node)].mol->graph));
  }
  const auto bits = fps[1].on_bits();
  const std::size_t k = bits.size();
  const std::size_t a = (k + 3) / 4;
  const std::size_t b = 4 * a - k;
  chem::Fingerprint quarter(fps[1].width(), fps[1].radius());
  for (std::size_t i = 0; i < a; ++i) quarter.set(bits[i]);
  for (std::size_t bit = 0, added = 0; added < b; ++bit) {
    if (!fps[1].test(bit)) {
      quarter.set(bit);
      ++added;
    }
  }
  ASSERT_EQ(chem::tanimoto(fps[1], quarter), 0.25);
  ASSERT_LE(chem::tanimoto(fps[1], fps[0]), 0.25);
  ASSERT_LE(chem::tanimoto(fps[0], quarter), 1.0);
  ReactionCorpusIndex idx;
  idx.add(fps[0]);
  idx.add(quarter);
  EXPECT_NEAR(synth_score(d, idx), 0.5, 1e-9);
}

// Exhaustive nearest neighbour over the 5-reaction corpus, written
// independently of the index.
TEST(SynthScore, MatchesAllPairsOracleOnFiveReactionCorpus) {
  const auto idx = corpus_index();
  std::vector<chem::Fingerprint> corpus;
  for (const auto& r : kCorpus) {
    std::vector<chem::MolPtr> ms;
    for (const auto& s : r.reactants) ms.push_back(chem::make_molecule(s));
    std::vector<const chem::MolGraph*> gs;
    for (const auto& m : ms) gs.push_back(&m->graph);
    corpus.push_back(chem::reaction_fingerprint(gs, chem::make_molecule(r.product)->graph, 2, 2048));
  }
  auto brute = [&](const std::vector<std::pair<std::vector<std::string>, std::string>>& rx) {
    double prod = 1.0;
    for (const auto& [rs, p] : rx) {
      std::vector<chem::MolPtr> ms;
      for (const auto& s : rs) ms.push_back(chem::make_molecule(s));
      std::vector<const chem::MolGraph*> gs;
      for (const auto& m : ms) gs.push_back(&m->graph);
      const auto q = chem::reaction_fingerprint(gs, chem::make_molecule(p)->graph, 2, 2048);
      double best = 0;
      for (const auto& c : corpus) {
        const double both = static_cast<double>([&] {
          std::size_t n = 0;
          for (std::size_t i = 0; i < 2048; ++i) n += q.test(i) && c.test(i);
          return n;
        }());
        double either = 0;
        for (std::size_t i = 0; i < 2048; ++i) either += q.test(i) || c.test(i);
        best = std::max(best, either == 0 ? 1.0 : both / either);
      }
      prod *= best;
    }
    return std::pow(prod, 1.0 / static_cast<double>(rx.size()));
  };

  const auto d1 = make_dag({{"CCO", true}, {"CC(=O)Cl", true}, {"CCOC(C)=O", false}}, {{0, 2}, {1, 2}}, 2);
  EXPECT_NEAR(synth_score(d1, idx), brute({{{"CCO", "CC(=O)Cl"}, "CCOC(C)=O"}}), 1e-12);

  const auto d2 = make_dag({{"Oc1ccccc1", true}, {"CCCBr", true}, {"Nc1ccccc1", true}, {"CCCOc1ccccc1", false},
                            {"CCCOc1ccccc1Nc1ccccc1", false}},
                           {{0, 3}, {1, 3}, {2, 4}, {3, 4}}, 4);
  const double s2 = synth_score(d2, idx);
  EXPECT_NEAR(s2, brute({{{"Oc1ccccc1", "CCCBr"}, "CCCOc1ccccc1"}, {{"CCCOc1ccccc1", "Nc1ccccc1"}, "CCCOc1ccccc1Nc1ccccc1"}}),
              1e-12);
  EXPECT_GT(s2, 0.0);
  EXPECT_LT(s2, 1.0);
  EXPECT_EQ(synth_score(paracetamol_dag(), idx), synth_score(paracetamol_dag(), idx));
}

TEST(SynthScore, OrderInvariantAndMonotone) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> k;
    for (std::size_t i = 0, n = 1 + rng.index(6); i < n; ++i) k.push_back(rng.uniform(0.01, 1.0));
    const double g = geometric_mean(k);
    auto shuffled = k;
    rng.shuffle(shuffled);
    EXPECT_NEAR(geometric_mean(shuffled), g, 1e-12);
    auto lower = k;
    lower[rng.index(lower.size())] *= rng.uniform();
    EXPECT_LE(geometric_mean(lower), g + 1e-15);
  }
}

TEST(SynthSummary, MedianStepsAndMean) {
  const auto idx = corpus_index();
  const auto one = make_dag({{"CC(=O)Cl", true}, {"Oc1ccccc1", true}, {"CC(=O)Oc1ccccc1", false}}, {{0, 2}, {1, 2}}, 2);
  const auto s = synth_summary({one, paracetamol_dag(), make_dag({{"CC", true}}, {}, 0)}, &idx);
  EXPECT_EQ(s.median_steps, 2.0);
  EXPECT_GT(s.mean_score, 0.5);
  EXPECT_TRUE(std::isnan(synth_summary({}, nullptr).median_steps));
}

}  // namespace
}  // namespace synthdag::eval
