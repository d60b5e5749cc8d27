#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "support/dag_util.hpp"
#include "support/route_oracle.hpp"
#include "synthdag/dag/io.hpp"
#include "synthdag/dag/serialize.hpp"
#include "synthdag/forge/dataset.hpp"
#include "synthdag/forge/synthetic.hpp"

namespace synthdag::forge {
namespace {

using namespace synthdag::testing;

const std::string kToy = std::string(SYNTHDAG_TEST_DATA) + "/toy12";

ParsedReactions parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_reactions_stream(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ParseReactions, FieldsAndFlags) {
  const auto p = parse_text(
      "CC(=O)Cl.Oc1ccccc1>>CC(=O)Oc1ccccc1\n"
      "CC.O>[Na+].[Cl-]>CCO.C extra tokens\n"
      "\n"
      "# comment\n"
      "CC.C1CC>>CCC\n"
      "CC>>\n"
      "CCO\n");
  ASSERT_EQ(p.records.size(), 2U);
  EXPECT_EQ(p.records[0].reactants.size(), 2U);
  EXPECT_EQ(p.records[0].reagents.size(), 0U);
  EXPECT_EQ(p.records[0].products.size(), 1U);
  EXPECT_EQ(p.records[0].line, 1U);
  EXPECT_FALSE(p.records[0].multi_product());
  EXPECT_EQ(p.records[1].reagents.size(), 2U);
  EXPECT_TRUE(p.records[1].multi_product());
  ASSERT_EQ(p.rejects.size(), 3U);
  EXPECT_EQ(p.rejects[0].line, 5U);
  EXPECT_EQ(p.rejects[1].line, 6U);
  EXPECT_EQ(p.rejects[2].line, 7U);
  EXPECT_THROW(parse_reactions("/nonexistent/rx.txt"), IoError);
}

TEST(FilterReactions, MappedReagentsAndMultiProduct) {
  auto p = parse_text(
      "[CH3:1][OH:2].[CH3:3][C:4](=[O:5])[OH:6].O=S(=O)(O)O>>[CH3:1][O:2][C:4]([CH3:3])=[O:5]\n"
      "CC>>C.C\n"
      "CC.O>>CCO\n");
  const auto f = filter_reactions(p.records);
  ASSERT_EQ(f.size(), 2U);
  EXPECT_EQ(f[0].reactants.size(), 2U);
  ASSERT_EQ(f[0].reagents.size(), 1U);
  EXPECT_EQ(f[0].reagents[0].mol->smiles, chem::make_molecule("OS(=O)(=O)O")->smiles);
  EXPECT_EQ(f[1].reactants.size(), 2U);
  EXPECT_EQ(f[1].reagents.size(), 0U);
  EXPECT_EQ(f[1].line, 3U);

  // Mapped record where no reactant contributes is dropped.
  auto q = parse_text("[CH4:7].O>>[CH3:1][OH:2]\n");
  EXPECT_TRUE(filter_reactions(q.records).empty());
}

TEST(BuildNetwork, ClosureExample) {
  // A=CC, B=CO, C=CCCO, D=CCCOCC, X,Y absent.
  const auto recs = records({{{"CC", "CO"}, "CCCO"}, {{"CCCO", "CC"}, "CCCOCC"}, {{"CCl", "CBr"}, "CCCBr"}});
  const auto cat = toy_catalog({"CC", "CO"});
  const ReactionNetwork net = build_network(recs, cat);
  EXPECT_EQ(net.reactions.size(), 2U);
  EXPECT_GE(net.find("CCCO"), 0);
  EXPECT_GE(net.find(chem::make_molecule("CCCOCC")->smiles), 0);
  EXPECT_LT(net.find(chem::make_molecule("CCCBr")->smiles), 0);

  const auto dags = extract_dags(net);
  ASSERT_EQ(dags.size(), 2U);
  const auto& d = dags[1];
  EXPECT_EQ(d.size(), 4U);  // A reused, not duplicated
  EXPECT_EQ(d.final_node().mol->smiles, chem::make_molecule("CCCOCC")->smiles);
  EXPECT_EQ(d.find("CC"), 0);

  EXPECT_TRUE(build_network(recs, dag::Catalog{}).reactions.empty());
}

TEST(BuildNetwork, BlockProductsAndSelfLoopsExcluded) {
  const auto recs = records({{{"CC", "CO"}, "CC"}, {{"CCO"}, "CCO"}, {{"CC"}, "CCO"}});
  const ReactionNetwork net = build_network(recs, toy_catalog({"CC", "CO"}));
  ASSERT_EQ(net.reactions.size(), 1U);
  EXPECT_EQ(net.reactions[0].line, 3U);
  EXPECT_EQ(extract_dags(net).size(), 1U);
}

TEST(BuildNetwork, ConflictingReactantSetsKeepTheFirst) {
  const auto recs = records({{{"CC", "CO"}, "CCCO"}, {{"CO", "CC"}, "CCOC"}, {{"CO", "CC"}, "CCCO"}});
  const ReactionNetwork net = build_network(recs, toy_catalog({"CC", "CO"}));
  EXPECT_EQ(net.reactions.size(), 1U);
  EXPECT_EQ(net.skipped_conflicts, 1U);
}

TEST(ExtractDags, TwoRoutesPickTheFirstInsertedStably) {
  const auto recs = records({{{"CCCO", "CO"}, "CCCOCO"}, {{"CC", "CO"}, "CCCO"}, {{"CCCO", "CCCO"}, "CCCOCO"}});
  const auto cat = toy_catalog({"CC", "CO"});
  const ReactionNetwork net = build_network(recs, cat);
  const auto a = extract_dags(net);
  const auto b = extract_dags(build_network(recs, cat));
  ASSERT_EQ(a.size(), 2U);
  // Line 3 enters in the first pass, line 1 only in the second.
  ASSERT_EQ(net.reactions.size(), 3U);
  EXPECT_EQ(net.reactions[1].line, 3U);
  EXPECT_EQ(net.reactions[2].line, 1U);
  EXPECT_EQ(a[1].parents()[static_cast<std::size_t>(a[1].final_id)].size(), 1U);
  EXPECT_EQ(dag::to_json_line(a[1]), dag::to_json_line(b[1]));
}

TEST(ExtractDags, BuildingBlocksGetNoDag) {
  const ReactionNetwork net = build_network({}, toy_catalog({"CC", "CO"}));
  EXPECT_TRUE(extract_dags(net).empty());
}

TEST(Toy12, MatchesHandTracedGolden) {
  const Dataset d = build_dataset(kToy + "/reactions.txt", dag::Catalog::load(kToy + "/blocks.smi"));
  EXPECT_EQ(d.summary.lines_parsed, 11U);
  ASSERT_EQ(d.rejects.size(), 1U);
  EXPECT_EQ(d.rejects[0].line, 11U);
  EXPECT_EQ(d.summary.kept_after_filter, 10U);
  EXPECT_EQ(d.network.reactions.size(), 8U);
  std::string got;
  for (const auto& g : d.dags) got += dag::to_json_line(g) + "\n";
  EXPECT_EQ(got, slurp(kToy + "/golden_dags.jsonl"));

  const auto dir = std::filesystem::temp_directory_path() / "synthdag_forge_toy12";
  std::filesystem::remove_all(dir);
  write_dataset(dir.string(), d, split_corpus(d.dags, {0.6, 0.2, 0.2}, 1));
  EXPECT_EQ(slurp((dir / "dags.jsonl").string()), slurp(kToy + "/golden_dags.jsonl"));
  const auto table = load_reaction_table((dir / "network_reactions.txt").string());
  EXPECT_EQ(table.size(), 8U);
  std::filesystem::remove_all(dir);
}

TEST(ExtractDags, EqualsBruteForceRouteEnumeration) {
  Rng rng(2024);
  std::size_t checked = 0, multi_route = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n_mols = 4 + static_cast<int>(rng.index(9));  // <= 12
    const int n_blocks = 1 + static_cast<int>(rng.index(3));
    std::vector<std::string> blocks;
    for (int b = 1; b <= n_blocks; ++b) blocks.push_back(std::string(static_cast<std::size_t>(b), 'C'));
    const auto rx = random_network(rng, n_mols, 3 + static_cast<int>(rng.index(12)));
    const ReactionNetwork net = build_network(records(rx), toy_catalog(blocks));
    ASSERT_LE(net.molecules.size(), 12U);
    const auto dags = extract_dags(net);

    const auto expect = brute_force_dags(net, &multi_route);
    ASSERT_EQ(dags.size(), expect.size());
    for (std::size_t k = 0; k < dags.size(); ++k) {
      EXPECT_EQ(dag::to_json_line(dags[k]), dag::to_json_line(expect[k]));
      EXPECT_TRUE(dag::validate(dags[k]).empty());
    }
    checked += dags.size();
  }
  EXPECT_GT(checked, 300U);
  EXPECT_GT(multi_route, 20U);
}

TEST(BuildNetwork, ClosureIsAFixedPointAndDagsUseNetworkReactions) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rx = random_network(rng, 10, 12);
    const auto cat = toy_catalog({"C", "CC"});
    const ReactionNetwork net = build_network(records(rx), cat);
    const ReactionNetwork again = build_network(network_records(net), cat);
    ASSERT_EQ(again.reactions.size(), net.reactions.size());
    ASSERT_EQ(again.molecules.size(), net.molecules.size());

    std::set<std::string> known;
    for (const auto& r : net.reactions) {
      auto names = net.reactant_smiles(r);
      known.insert(oracle::reactant_key(names) + ">" + net.molecules[static_cast<std::size_t>(r.product)].mol->smiles);
    }
    for (const auto& d : extract_dags(net)) {
      const auto par = d.parents();
      for (const auto& n : d.nodes) {
        if (n.kind != dag::NodeKind::product) continue;
        std::vector<std::string> names;
        for (int p : par[static_cast<std::size_t>(n.id)]) names.push_back(d.nodes[static_cast<std::size_t>(p)].mol->smiles);
        EXPECT_TRUE(known.count(oracle::reactant_key(names) + ">" + n.mol->smiles));
      }
    }
  }
}

TEST(SplitCorpus, CountsDeterminismDisjointness) {
  std::vector<dag::SynthesisDAG> dags;
  for (int i = 0; i < 100; ++i) {
    dags.push_back(make_dag({{"CC", true}, {std::string(static_cast<std::size_t>(i + 3), 'C'), false}}, {{0, 1}}, 1));
  }
  const Split a = split_corpus(dags, {0.9, 0.05, 0.05}, 11);
  const Split b = split_corpus(dags, {0.9, 0.05, 0.05}, 11);
  EXPECT_EQ(a.train.size(), 90U);
  EXPECT_EQ(a.valid.size(), 5U);
  EXPECT_EQ(a.test.size(), 5U);
  EXPECT_EQ(a.train_idx, b.train_idx);
  EXPECT_EQ(a.test_idx, b.test_idx);
  std::set<std::size_t> all(a.train_idx.begin(), a.train_idx.end());
  all.insert(a.valid_idx.begin(), a.valid_idx.end());
  all.insert(a.test_idx.begin(), a.test_idx.end());
  EXPECT_EQ(all.size(), 100U);
  EXPECT_NE(split_corpus(dags, {0.9, 0.05, 0.05}, 12).train_idx, a.train_idx);
  EXPECT_THROW(split_corpus(dags, {0.9, 0.2, 0.05}, 1), ConfigError);
  EXPECT_THROW(split_corpus(dags, {1.1, -0.1, 0.0}, 1), ConfigError);
}

TEST(Synthetic, EachLineYieldsOneRoundTrippingDag) {
  SyntheticOptions o;
  o.reactions = 80;
  const SyntheticCorpus c = synthetic_reactions(o, 5);
  EXPECT_EQ(c.reactions.size(), 80U);
  EXPECT_EQ(synthetic_reactions(o, 5).reactions, c.reactions);

  std::string text;
  for (const auto& l : c.reactions) text += l + "\n";
  auto parsed = parse_text(text);
  ASSERT_TRUE(parsed.rejects.empty());
  const auto cat = dag::Catalog::from_smiles(c.blocks);
  const ReactionNetwork net = build_network(filter_reactions(parsed.records), cat);
  const auto dags = extract_dags(net);
  ASSERT_EQ(dags.size(), 80U);
  std::size_t deep = 0;
  oracle::LookupOracle oracle(network_table(net));
  for (std::size_t i = 0; i < dags.size(); ++i) {
    if (dags[i].num_products() >= 3) ++deep;
    for (const auto& n : dags[i].nodes) EXPECT_LE(n.mol->graph.num_atoms(), 24U);
    Rng rng(i);
    const auto seq = dag::serialize(dags[i], rng);
    const auto r = dag::replay(seq, cat, oracle, rng);
    EXPECT_TRUE(dag::same_dag(r.dag, dags[i]));
  }
  EXPECT_GT(deep, 10U);
}

}  // namespace
}  // namespace synthdag::forge
