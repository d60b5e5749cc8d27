#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support/dag_util.hpp"
#include "support/model_util.hpp"
#include "synthdag/dag/serialize.hpp"
#include "synthdag/model/reconstruct.hpp"
#include "synthdag/model/train.hpp"
#include "synthdag/nn/grad_check.hpp"

namespace synthdag::model {
namespace {

using namespace synthdag::testing;
using Md = nn::Mat<double>;

struct World {
  Catalog catalog = toy_catalog(paracetamol_blocks());
  oracle::LookupOracle lookup{table_of(paracetamol_reactions())};
  oracle::MemoOracle oracle{lookup};
};

ModelConfig small(Mode mode) {
  ModelConfig c = micro_config(mode);
  c.mol_dim = c.action_embed_dim = 16;
  c.context_width = 24;
  return c;
}

TEST(Embed, DeterministicAndAtomOrderInvariant) {
  DogModel<float> m(ModelConfig::ae_defaults(), 1);
  nn::Tape<float> t(false);
  const auto a = chem::make_molecule("OCC(=O)Nc1ccccc1");
  const auto b = chem::make_molecule("c1ccc(NC(=O)CO)cc1");
  const std::vector<MolPtr> both = {a, b, a};
  const nn::Mat<float> e = m.embed(t, both).value();
  EXPECT_EQ(e.cols(), 50);
  // Within a batch, row position can change the last bits of a GEMM.
  EXPECT_TRUE(e.row(0).isApprox(e.row(1), 1e-6F));
  EXPECT_TRUE(e.row(0).isApprox(e.row(2), 1e-6F));
  const std::vector<MolPtr> one_a = {a};
  const std::vector<MolPtr> one_b = {b};
  EXPECT_EQ(m.embed(t, one_a).value(), m.embed(t, one_a).value());
  EXPECT_EQ(m.embed(t, one_a).value(), m.embed(t, one_b).value());
  EXPECT_EQ(m.embed_molecule(a), m.embed(t, one_a).value());
}

TEST(Embed, DefaultsHaveDocumentedSizes) {
  const ModelConfig ae = ModelConfig::ae_defaults();
  EXPECT_EQ(ae.mol_dim, 50);
  EXPECT_EQ(ae.latent_dim, 25);
  EXPECT_EQ(ae.context_layers, 3);
  EXPECT_EQ(ae.context_width, 200);
  EXPECT_EQ(ae.action_hidden, 28);
  EXPECT_EQ(ae.ggnn_steps, 4);
  const ModelConfig gen = ModelConfig::gen_defaults();
  EXPECT_EQ(gen.ggnn_steps, 5);
  EXPECT_EQ(gen.atom_hidden, 80);
  EXPECT_EQ(gen.mol_dim, 160);
  EXPECT_EQ(gen.context_width, 512);
  ModelConfig bad = gen;
  bad.action_embed_dim = 7;
  EXPECT_THROW(bad.validate(), ConfigError);
  const nlohmann::json j = ae;
  EXPECT_EQ(j.get<ModelConfig>().context_width, 200);
  EXPECT_EQ(j.get<ModelConfig>().mode, Mode::ae);
}

TEST(DecodeLogits, FirstNodeAdditionIsASingleton) {
  World w;
  DogModel<double> m(small(Mode::gen), 2);
  DecodeState st(w.catalog, 20);
  const MaskedLogits ml = m.decode_logits(Md::Constant(1, 24, 0.3), st);
  ASSERT_EQ(ml.logits.size(), 2U);
  EXPECT_EQ(ml.mask, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(nn::masked_softmax<double>(ml.logits, ml.mask)[0], 1.0);
}

TEST(DecodeLogits, BuildingBlocksAlreadyUsedAreMasked) {
  World w;
  DogModel<double> m(small(Mode::gen), 3);
  DecodeState st(w.catalog, 30);
  st.apply(Action::add_block());
  EXPECT_EQ(m.decode_logits(Md::Zero(1, 24), st).live(), 4U);
  st.apply(Action::block(w.catalog[1]));
  st.apply(Action::add_block());
  const MaskedLogits ml = m.decode_logits(Md::Zero(1, 24), st);
  EXPECT_EQ(ml.logits.size(), 4U);
  EXPECT_EQ(ml.live(), 3U);
  EXPECT_EQ(ml.mask[1], 0);
}

TEST(DecodeLogits, ScalingOneCandidateChangesOnlyItsLogit) {
  World w;
  DogModel<double> m(small(Mode::gen), 4);
  DecodeState st(w.catalog, 30);
  st.apply(Action::add_block());
  st.apply(Action::block(w.catalog[0]));
  st.apply(Action::add_product());
  st.apply(Action::reactant(w.catalog[0]));
  Rng rng(1);
  Md ctx(1, 24);
  for (Eigen::Index i = 0; i < ctx.size(); ++i) ctx.data()[i] = rng.normal();
  const MaskedLogits a = m.decode_logits(ctx, st);
  m.params().at("act.h_STOPF").value *= 2.0;
  const MaskedLogits b = m.decode_logits(ctx, st);
  ASSERT_EQ(a.logits.size(), 3U);  // molecule, STOP_I, STOP_F
  EXPECT_EQ(a.logits[0], b.logits[0]);
  EXPECT_EQ(a.logits[1], b.logits[1]);
  EXPECT_NEAR(b.logits[2], 2.0 * a.logits[2], 1e-12);
}

TEST(LogProb, ForcedStepsContributeNothing) {
  // One block and a four-step budget leave exactly one complete sequence.
  const Catalog cat = toy_catalog({"CCO"});
  oracle::LookupOracle o(table_of({{{"CCO"}, "CCOC"}}));
  DogModel<double> m(small(Mode::gen), 5);
  const auto seqs = enumerate_sequences(cat, o, 4);
  ASSERT_EQ(seqs.size(), 1U);
  EXPECT_EQ(dag::to_text(seqs[0]), "B M:CCO P STOP_F");
  ModelConfig c = small(Mode::gen);
  c.max_steps = 4;
  DogModel<double> tight(c, 5);
  EXPECT_EQ(tight.log_prob(seqs[0], cat), 0.0);
}

TEST(LogProb, SumsToOneOverAllSequencesOfAToyWorld) {
  const Catalog cat = toy_catalog({"CCO"});
  oracle::LookupOracle lookup(table_of({{{"CCO"}, "CCOC"}}));
  oracle::MemoOracle o(lookup);
  for (Mode mode : {Mode::gen, Mode::ae}) {
    ModelConfig c = small(mode);
    c.max_steps = 10;
    DogModel<double> m(c, 6);
    Md z(1, c.latent_dim);
    z << 0.3, -1.0, 0.5, 2.0;
    const auto seqs = enumerate_sequences(cat, o, c.max_steps);
    EXPECT_GT(seqs.size(), 5U);
    double total = 0;
    for (const auto& s : seqs) {
      const double lp = m.log_prob(s, cat, z);
      EXPECT_LE(lp, 0.0);
      total += std::exp(lp);
    }
    EXPECT_NEAR(total, 1.0, 1e-6) << to_string(mode);
  }
}

TEST(LogProb, PermutationSensitiveAndCatalogOrderInvariant) {
  World w;
  DogModel<double> m(small(Mode::gen), 7);
  const SynthesisDAG d = paracetamol_dag();
  std::set<std::string> texts;
  std::set<double> lps;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const ActionSeq seq = dag::serialize(d, rng);
    if (texts.insert(dag::to_text(seq)).second) lps.insert(m.log_prob(seq, w.catalog));
  }
  ASSERT_EQ(texts.size(), 2U);
  EXPECT_EQ(lps.size(), 2U);

  Rng rng(0);
  const ActionSeq seq = dag::serialize(d, rng);
  std::vector<std::string> rev = paracetamol_blocks();
  std::reverse(rev.begin(), rev.end());
  EXPECT_NEAR(m.log_prob(seq, w.catalog), m.log_prob(seq, toy_catalog(rev)), 1e-12);
}

TEST(LogProb, GenModeIgnoresLatent) {
  World w;
  DogModel<double> m(small(Mode::gen), 8);
  Rng rng(0);
  const ActionSeq seq = dag::serialize(paracetamol_dag(), rng);
  Md z(1, 4);
  z << 5, -3, 2, 1;
  EXPECT_EQ(m.log_prob(seq, w.catalog, z), m.log_prob(seq, w.catalog));
  EXPECT_THROW(m.log_prob(dag::parse_action_seq("B M:CCO P STOP_F"), w.catalog), Error);
}

TEST(Sample, UntrainedSamplesAreAllValidAndScoredConsistently) {
  World w;
  DogModel<double> m(small(Mode::gen), 9);
  Rng rng(10);
  const auto out = m.decode(Md(), 300, w.catalog, w.oracle, rng, false, 40);
  ASSERT_EQ(out.size(), 300U);
  std::set<std::string> distinct;
  for (const auto& d : out) {
    const auto v = dag::validate(d.dag);
    ASSERT_TRUE(v.empty()) << v.front().what;
    EXPECT_LE(static_cast<int>(d.seq.size()), 40);
    distinct.insert(dag::dag_key(d.dag));
  }
  EXPECT_GT(distinct.size(), 5U);
  ModelConfig c = small(Mode::gen);
  c.max_steps = 40;
  DogModel<double> same(c, nn::ParamStore<double>(m.params().cast<double>()));
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(out[i].log_prob, same.log_prob(out[i].seq, w.catalog), 1e-9) << dag::to_text(out[i].seq);
  }
}

TEST(Sample, BatchingDoesNotChangeResults) {
  World w;
  DogModel<double> m(small(Mode::gen), 11);
  const auto many = m.decode_seeded(Md(), 10, w.catalog, w.oracle, 77, 0, false);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto one = m.decode_seeded(Md(), 1, w.catalog, w.oracle, 77, i, false);
    EXPECT_EQ(dag::to_text(many[i].seq), dag::to_text(one[0].seq));
    EXPECT_EQ(many[i].log_prob, one[0].log_prob);
  }
}

TEST(Sample, GreedyIsDeterministicAndRejectsTinyBudgets) {
  World w;
  DogModel<double> m(small(Mode::ae), 12);
  Md z(1, 4);
  z << 0.1, 0.2, -0.3, 0.4;
  Rng r1(1), r2(99);
  const Decoded a = m.greedy_decode(z, w.catalog, w.oracle, r1);
  const Decoded b = m.greedy_decode(z, w.catalog, w.oracle, r2);
  EXPECT_EQ(dag::to_text(a.seq), dag::to_text(b.seq));
  EXPECT_THROW(m.greedy_decode(z, w.catalog, w.oracle, r1, 3), dag::MaxStepsExceeded);
}

TEST(Encode, DimensionsAndRelabelingInvariance) {
  DogModel<double> m(ModelConfig::ae_defaults(), 13);
  const SynthesisDAG d = paracetamol_dag();
  // Same DAG with node ids reversed.
  SynthesisDAG r = d;
  const int n = static_cast<int>(d.nodes.size());
  for (int i = 0; i < n; ++i) {
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = d.nodes[static_cast<std::size_t>(i)];
    r.nodes[static_cast<std::size_t>(n - 1 - i)].id = n - 1 - i;
  }
  for (auto& [a, b] : r.edges) {
    a = n - 1 - a;
    b = n - 1 - b;
  }
  r.final_id = n - 1 - d.final_id;
  ASSERT_TRUE(dag::validate(r).empty());
  nn::Tape<double> t(false);
  const std::vector<SynthesisDAG> both = {d, r};
  const Posterior<double> p = m.encode(t, both);
  EXPECT_EQ(p.mu.cols(), 25);
  EXPECT_EQ(p.logvar.cols(), 25);
  EXPECT_TRUE(p.mu.value().row(0).isApprox(p.mu.value().row(1), 1e-13));
  EXPECT_TRUE(p.logvar.value().row(0).isApprox(p.logvar.value().row(1), 1e-13));
}

TEST(Encode, LeafChangePropagatesToTheFinalNode) {
  DogModel<double> m(small(Mode::ae), 14);
  const std::vector<SynthesisDAG> ds = {
      make_dag({{"CCO", true}, {"CC(=O)O", true}, {"CCOC(C)=O", false}}, {{0, 2}, {1, 2}}, 2),
      make_dag({{"CCCO", true}, {"CC(=O)O", true}, {"CCOC(C)=O", false}}, {{0, 2}, {1, 2}}, 2)};
  const Md mu = m.encode_mean(ds);
  EXPECT_GT((mu.row(0) - mu.row(1)).norm(), 1e-6);
  DogModel<double> gen(small(Mode::gen), 14);
  EXPECT_THROW(gen.encode_mean(ds), ConfigError);
  SynthesisDAG bad = ds[0];
  bad.edges.push_back({2, 0});
  EXPECT_THROW(m.encode_mean(std::vector<SynthesisDAG>{bad}), Error);
}

struct Batch {
  std::vector<SynthesisDAG> dags;
  std::vector<ActionSeq> seqs;
};

Batch two_dag_batch() {
  Batch b;
  b.dags = {paracetamol_dag(), make_dag({{kPhenol, true}, {kNitricAcid, true}, {kNitrophenol, false}}, {{0, 2}, {1, 2}}, 2)};
  Rng rng(0);
  for (const auto& d : b.dags) b.seqs.push_back(dag::serialize(d, rng));
  return b;
}

TEST(WaeLoss, ZeroLambdaIsReconstructionOnly) {
  World w;
  DogModel<double> m(small(Mode::ae), 15);
  const Batch b = two_dag_batch();
  nn::Tape<double> t(false);
  Rng r1(4);
  const WaeParts<double> zero = m.wae_loss(t, b.dags, b.seqs, w.catalog, r1, false, 0.0);
  EXPECT_EQ(zero.loss.scalar(), zero.nll);
  Rng r2(4);
  const WaeParts<double> ten = m.wae_loss(t, b.dags, b.seqs, w.catalog, r2, false);
  EXPECT_NEAR(ten.loss.scalar(), ten.nll + 10.0 * ten.mmd, 1e-12);
  EXPECT_EQ(ten.nll, zero.nll);
  Rng r3(4);
  const std::vector<SynthesisDAG> one = {b.dags[0]};
  const std::vector<ActionSeq> one_s = {b.seqs[0]};
  EXPECT_THROW(m.wae_loss(t, one, one_s, w.catalog, r3, false), Error);
}

TEST(WaeLoss, PriorSamplesGiveANearZeroPenalty) {
  DogModel<double> m(small(Mode::ae), 16);
  Rng rng(5);
  nn::Tape<double> t(false);
  const double v = nn::mmd_imq(t.constant(m.normal(rng, 400)), t.constant(m.normal(rng, 400))).scalar();
  EXPECT_LT(std::abs(v), 0.01);
}

TEST(GradCheck, FullModelOnMicroConfig) {
  World w;
  const Batch b = two_dag_batch();
  // Seed 17 puts a ReLU pre-activation within eps of zero, where central
  // differences are meaningless.
  DogModel<double> m(micro_config(Mode::ae), 19);
  const auto wae = nn::grad_check(
      [&](nn::Tape<double>& t, nn::ParamStore<double>&) {
        Rng r(21);
        return m.wae_loss(t, b.dags, b.seqs, w.catalog, r, true).loss;
      },
      m.params(), 1e-4);
  EXPECT_LT(wae.max_rel_error, 1e-3) << wae.worst;
  EXPECT_EQ(wae.checked, m.params().num_values());

  DogModel<double> g(micro_config(Mode::gen), 18);
  const auto lp = nn::grad_check(
      [&](nn::Tape<double>& t, nn::ParamStore<double>&) {
        Rng r(22);
        return g.gen_loss(t, b.seqs, w.catalog, r, true);
      },
      g.params(), 1e-4);
  EXPECT_LT(lp.max_rel_error, 1e-3) << lp.worst;
}

TEST(Train, OneEpochOnOneSequenceLowersItsNll) {
  World w;
  DogModel<float> m(small(Mode::gen), 19);
  const std::vector<SynthesisDAG> corpus = {paracetamol_dag()};
  TrainSchedule s;
  s.epochs = 1;
  s.seed = 3;
  Rng ser = Rng(s.seed).child("serialize", 0);
  const ActionSeq seq = dag::serialize(corpus[0], ser);
  const double before = m.log_prob(seq, w.catalog);
  train(m, corpus, {}, w.catalog, s);
  EXPECT_GT(m.log_prob(seq, w.catalog), before);
}

TEST(Train, WritesLogAndReloadableCheckpoints) {
  World w;
  DogModel<float> m(small(Mode::ae), 20);
  const Batch b = two_dag_batch();
  const auto dir = std::filesystem::temp_directory_path() / "synthdag_train_test";
  std::filesystem::remove_all(dir);
  TrainSchedule s;
  s.epochs = 4;
  s.batch_size = 2;
  s.milestones = {2};
  s.checkpoint_every = 2;
  s.out_dir = dir;
  const auto log = train(m, b.dags, b.dags, w.catalog, s);
  ASSERT_EQ(log.size(), 8U);
  EXPECT_EQ(log[0].split, "train");
  EXPECT_EQ(log[1].split, "valid");
  EXPECT_DOUBLE_EQ(log[2].lr, 1e-3);
  EXPECT_NEAR(log[4].lr, 1e-4, 1e-12);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_epoch2.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_epoch4.json"));
  std::ifstream csv(dir / "train_log.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,split,nll,mmd,lr");
  auto loaded = load_model(dir / "checkpoint.json");
  EXPECT_EQ(loaded->config().mode, Mode::ae);
  EXPECT_EQ(loaded->params().step, m.params().step);
  EXPECT_EQ(loaded->log_prob(b.seqs[0], w.catalog, Md::Zero(1, 4).cast<float>()),
            m.log_prob(b.seqs[0], w.catalog, Md::Zero(1, 4).cast<float>()));
  std::filesystem::remove_all(dir);
}

TEST(Train, OverfitOneSequenceThenGreedyReproducesIt) {
  World w;
  ModelConfig c = small(Mode::gen);
  c.dropout = 0.0;
  DogModel<float> m(c, 21);
  const std::vector<SynthesisDAG> corpus = {paracetamol_dag()};
  TrainSchedule s;
  s.epochs = 150;
  s.lr = 1e-2;
  train(m, corpus, {}, w.catalog, s);
  Rng rng(0);
  const Decoded d = m.greedy_decode(nn::Mat<float>(), w.catalog, w.oracle, rng);
  EXPECT_TRUE(dag::same_dag(d.dag, corpus[0])) << dag::to_text(d.seq);
}

TEST(Reconstruct, UntrainedRateIsLowAndWalkBasics) {
  World w;
  DogModel<double> m(small(Mode::ae), 22);
  const Batch b = two_dag_batch();
  Rng rng(1);
  const ReconResult r = reconstruct_rate(m, b.dags, w.catalog, w.oracle, rng);
  EXPECT_EQ(r.matched.size(), 2U);
  EXPECT_LE(r.dag_rate, 0.5);

  Md z0(1, 4);
  z0 << 0.5, -0.5, 0.25, 0;
  Rng a(2), bb(2);
  const auto one = latent_walk(m, z0, 0.0, 1, w.catalog, w.oracle, a);
  ASSERT_EQ(one.dags.size(), 1U);
  EXPECT_EQ(dag::to_text(one.dags[0].seq), dag::to_text(m.greedy_decode(z0, w.catalog, w.oracle, bb).seq));
  EXPECT_THROW(latent_walk(m, z0, 0.0, 2, w.catalog, w.oracle, a, 20), Error);

  Rng c(3);
  const auto walk = latent_walk(m, z0, 3.0, 2, w.catalog, w.oracle, c);
  std::set<std::string> keys;
  for (const auto& d : walk.dags) keys.insert(dag::dag_key(d.dag));
  EXPECT_EQ(keys.size(), 2U);
  EXPECT_NE(walk.graph.to_dot().find("digraph"), std::string::npos);
}

}  // namespace
}  // namespace synthdag::model
