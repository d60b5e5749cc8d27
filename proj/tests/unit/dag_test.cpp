#include <gtest/gtest.h>

#include <algorithm>

#include "support/dag_util.hpp"
#include "synthdag/dag/decode_state.hpp"
#include "synthdag/dag/io.hpp"
#include "synthdag/dag/raw_graph.hpp"

namespace synthdag::dag {
namespace {

using namespace synthdag::testing;

bool has_violation(const SynthesisDAG& d, const std::string& what) {
  for (const auto& v : validate(d)) {
    if (v.what.find(what) != std::string::npos) return true;
  }
  return false;
}

TEST(Validate, ParacetamolIsValid) {
  const SynthesisDAG d = paracetamol_dag();
  EXPECT_TRUE(validate(d).empty());
  EXPECT_EQ(d.size(), 7U);
  EXPECT_EQ(d.num_products(), 3U);
}

TEST(Validate, DuplicateMolecule) {
  const SynthesisDAG d = make_dag({{"CC", true}, {"CC", true}, {"CCO", false}}, {{0, 2}, {1, 2}}, 2);
  EXPECT_TRUE(has_violation(d, "duplicate molecule"));
}

TEST(Validate, Cycle) {
  const SynthesisDAG d =
      make_dag({{"CC", true}, {"CCO", false}, {"CCN", false}, {"CCCl", false}}, {{0, 1}, {1, 2}, {2, 1}, {2, 3}}, 3);
  EXPECT_TRUE(has_violation(d, "cycle"));
}

TEST(Validate, StructuralRules) {
  EXPECT_TRUE(has_violation(make_dag({{"CC", true}, {"CCO", false}}, {{1, 0}}, 0), "building block with incoming"));
  EXPECT_TRUE(has_violation(make_dag({{"CC", false}, {"CCO", false}}, {{0, 1}}, 1), "product without reactants"));
  EXPECT_TRUE(has_violation(make_dag({{"CC", true}, {"N", true}, {"CCO", false}}, {{0, 2}}, 2), "extra sink"));
  EXPECT_TRUE(has_violation(make_dag({{"CC", true}, {"CCO", false}}, {{0, 1}}, 0), "final"));
  EXPECT_TRUE(has_violation(make_dag({{"CC", true}, {"CCO", false}}, {{0, 1}, {0, 1}}, 1), "duplicate edge"));
  EXPECT_TRUE(has_violation(make_dag({{"CC", true}, {"CCO", false}}, {{0, 5}}, 1), "out of range"));
  EXPECT_TRUE(has_violation(SynthesisDAG{}, "empty"));
  // A decode whose final product collapsed onto a building block.
  EXPECT_TRUE(validate(make_dag({{"CC", true}}, {}, 0)).empty());
}

TEST(DagKey, IgnoresNodeIds) {
  const SynthesisDAG a = paracetamol_dag();
  SynthesisDAG b = make_dag({{kAceticAnhydride, true},
                             {kHydrogen, true},
                             {kNitricAcid, true},
                             {kPhenol, true},
                             {kNitrophenol, false},
                             {kAminophenol, false},
                             {kParacetamol, false}},
                            {{3, 4}, {2, 4}, {4, 5}, {1, 5}, {5, 6}, {0, 6}}, 6);
  EXPECT_TRUE(validate(b).empty());
  EXPECT_TRUE(same_dag(a, b));
  b.edges[1] = {1, 4};
  EXPECT_FALSE(same_dag(a, b));
}

TEST(Transition, AllCases) {
  auto m = chem::make_molecule("CC");
  EXPECT_EQ(transition(ActionType::node_addition, Action::add_block()), ActionType::building_block);
  EXPECT_EQ(transition(ActionType::node_addition, Action::add_product()), ActionType::connectivity);
  EXPECT_EQ(transition(ActionType::building_block, Action::block(m)), ActionType::node_addition);
  EXPECT_EQ(transition(ActionType::connectivity, Action::reactant(m)), ActionType::connectivity);
  EXPECT_EQ(transition(ActionType::connectivity, Action::stop_intermediate()), ActionType::node_addition);
  EXPECT_EQ(transition(ActionType::connectivity, Action::stop_final()), std::nullopt);
  EXPECT_THROW(transition(ActionType::node_addition, Action::stop_final()), TransitionError);
  EXPECT_THROW(transition(ActionType::building_block, Action::add_block()), TransitionError);
  EXPECT_THROW(transition(ActionType::connectivity, Action::block(m)), TransitionError);
}

TEST(LegalActions, FreshStateOnlyAddsABlock) {
  const Catalog cat = toy_catalog({"CC", "N"});
  const DecodeState st(cat);
  const LegalActions l = st.legal();
  EXPECT_EQ(l.type, ActionType::node_addition);
  EXPECT_TRUE(l.add_block);
  EXPECT_FALSE(l.add_product);
  EXPECT_EQ(l.count(), 1U);
}

TEST(LegalActions, ConnectivityStopsFollowReactantSet) {
  const Catalog cat = toy_catalog({"CC", "N", "O"});
  DecodeState st(cat);
  const auto m1 = cat[0];
  const auto m2 = cat[1];
  st.apply(Action::add_block());
  st.apply(Action::block(m1));
  {
    const LegalActions l = st.legal();
    EXPECT_TRUE(l.add_block);
    EXPECT_TRUE(l.add_product);
  }
  st.apply(Action::add_block());
  {
    // Already-present building blocks are masked.
    const LegalActions l = st.legal();
    EXPECT_EQ(l.blocks, (std::vector<bool>{false, true, true}));
  }
  st.apply(Action::block(m2));
  st.apply(Action::add_product());
  {
    const LegalActions l = st.legal();
    EXPECT_EQ(l.reactants, (std::vector<bool>{true, true}));
    EXPECT_FALSE(l.stop_intermediate);
    EXPECT_TRUE(l.stop_final);
    EXPECT_EQ(l.count(), 3U);
  }
  st.apply(Action::reactant(m1));
  {
    const LegalActions l = st.legal();
    EXPECT_EQ(l.reactants, (std::vector<bool>{false, true}));
    EXPECT_TRUE(l.stop_intermediate);
    EXPECT_TRUE(l.stop_final);
    EXPECT_EQ(l.count(), 3U);
  }
  EXPECT_THROW(st.apply(Action::reactant(m1)), IllegalAction);
  EXPECT_THROW(st.apply(Action::add_block()), IllegalAction);
}

TEST(LegalActions, AddBlockMaskedWhenCatalogExhausted) {
  const Catalog cat = toy_catalog({"CC"});
  DecodeState st(cat);
  st.apply(Action::add_block());
  st.apply(Action::block(cat[0]));
  const LegalActions l = st.legal();
  EXPECT_FALSE(l.add_block);
  EXPECT_TRUE(l.add_product);
}

TEST(LegalActions, BudgetMasksGuaranteeTermination) {
  const Catalog cat = toy_catalog({"CC", "N", "O"});
  DecodeState st(cat, 6);
  st.apply(Action::add_block());
  st.apply(Action::block(cat[0]));
  // 4 actions left: another block would need B, M, P, STOP_F.
  EXPECT_TRUE(st.legal().add_block);
  st.apply(Action::add_product());
  // 3 left: reactant (then STOP_F) and STOP_F fit, STOP_I needs P and STOP_F after it.
  st.apply(Action::reactant(cat[0]));
  const LegalActions l = st.legal();
  EXPECT_FALSE(l.stop_intermediate);
  EXPECT_TRUE(l.stop_final);
  EXPECT_EQ(l.count(), 1U);
  EXPECT_THROW(DecodeState(cat, 3), MaxStepsExceeded);
}

TEST(DecodeState, StopUpdatesSets) {
  const Catalog cat = toy_catalog({"CC", "N"});
  DecodeState st(cat);
  st.apply(Action::add_block());
  st.apply(Action::block(cat[0]));
  st.apply(Action::add_block());
  st.apply(Action::block(cat[1]));
  st.apply(Action::add_product());
  st.apply(Action::reactant(cat[0]));
  EXPECT_FALSE(st.is_unused(0));
  EXPECT_TRUE(st.is_unused(1));
  EXPECT_EQ(st.intermediate_inputs().size(), 1U);
  EXPECT_EQ(st.final_inputs().size(), 2U);
  EXPECT_THROW(st.apply(Action::stop_intermediate()), IllegalAction);
  st.apply(Action::stop_intermediate(chem::make_molecule("CCO")));
  ASSERT_EQ(st.molecules().size(), 3U);
  EXPECT_TRUE(st.is_unused(2));
  EXPECT_EQ(st.type(), ActionType::node_addition);
  st.apply(Action::add_product());
  st.apply(Action::stop_final(chem::make_molecule("CCON")));
  EXPECT_TRUE(st.finished());
  const SynthesisDAG d = st.to_dag();
  EXPECT_TRUE(validate(d).empty());
  EXPECT_EQ(d.size(), 4U);
  EXPECT_EQ(d.final_node().mol->smiles, chem::make_molecule("CCON")->smiles);
  EXPECT_EQ(d.parents()[static_cast<std::size_t>(d.final_id)].size(), 2U);
}

TEST(RemoveLoops, AcyclicInputUnchanged) {
  const SynthesisDAG d = paracetamol_dag();
  const SynthesisDAG r = remove_loops(to_raw(d));
  EXPECT_EQ(to_json_line(r), to_json_line(d));
}

// Hand-built loop: A, B -> C; C -> D; D re-creates C (an ancestor); the
// final E is made from C and D. Manual resolution keeps the first C and drops
// the D -> C edge.
TEST(RemoveLoops, LaterDuplicateCreationIsFolded) {
  auto A = chem::make_molecule("CC");
  auto B = chem::make_molecule("N");
  auto C = chem::make_molecule("CCN");
  auto D = chem::make_molecule("CCNO");
  auto E = chem::make_molecule("CCNOCl");
  RawGraph raw;
  raw.events = {{A, {}}, {B, {}}, {C, {A, B}}, {D, {C}}, {C, {D}}, {E, {C, D}}};
  raw.final_mol = E;
  const SynthesisDAG d = remove_loops(raw);
  ASSERT_TRUE(validate(d).empty());
  const SynthesisDAG expected = make_dag({{"CC", true}, {"N", true}, {"CCN", false}, {"CCNO", false}, {"CCNOCl", false}},
                                         {{0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}}, 4);
  EXPECT_EQ(to_json_line(d), to_json_line(expected));
  EXPECT_EQ(to_json_line(remove_loops(to_raw(d))), to_json_line(d));
}

TEST(RemoveLoops, PrunesNonAncestorsAndCollapsedFinal) {
  auto A = chem::make_molecule("CC");
  auto B = chem::make_molecule("N");
  auto C = chem::make_molecule("CCN");
  RawGraph raw;
  raw.events = {{A, {}}, {B, {}}, {C, {A}}, {A, {C, B}}};
  raw.final_mol = A;
  const SynthesisDAG d = remove_loops(raw);
  EXPECT_EQ(d.size(), 1U);
  EXPECT_EQ(d.final_node().kind, NodeKind::building_block);
  EXPECT_TRUE(validate(d).empty());

  raw.events = {{A, {}}, {B, {}}, {C, {A}}, {chem::make_molecule("CCC"), {C}}};
  raw.final_mol = raw.events.back().mol;
  const SynthesisDAG pruned = remove_loops(raw);
  EXPECT_EQ(pruned.size(), 3U);
  EXPECT_EQ(pruned.find(B->smiles), -1);
}

TEST(DagJson, RoundTripAndRemap) {
  const SynthesisDAG d = paracetamol_dag();
  const std::string line = to_json_line(d);
  EXPECT_EQ(to_json_line(dag_from_json_line(line)), line);
  const std::string shuffled =
      R"({"nodes":[{"id":10,"kind":"product","smiles":"CCO"},{"id":3,"kind":"building_block","smiles":"CC"}],)"
      R"("edges":[[3,10]],"final":10})";
  const SynthesisDAG r = dag_from_json_line(shuffled);
  EXPECT_EQ(r.final_id, 0);
  EXPECT_EQ(r.edges, (std::vector<Edge>{{1, 0}}));
  EXPECT_TRUE(validate(r).empty());
  EXPECT_THROW(dag_from_json_line(R"({"nodes":[{"id":0,"kind":"x","smiles":"C"}],"edges":[],"final":0})"), Error);
}

TEST(ActionText, RoundTrip) {
  const std::string line = "B M:OCC P R:CCO STOP_I P STOP_F";
  const ActionSeq seq = parse_action_seq(line);
  ASSERT_EQ(seq.size(), 7U);
  EXPECT_EQ(seq.actions[1].mol->smiles, "CCO");
  EXPECT_EQ(to_text(seq), "B M:CCO P R:CCO STOP_I P STOP_F");
  EXPECT_EQ(parse_action_seq(to_text(seq)), seq);
  EXPECT_THROW(parse_action_seq("B X:CC"), Error);
  EXPECT_EQ(implied_types(seq).size(), 7U);
  EXPECT_THROW(implied_types(parse_action_seq("B M:C P")), TransitionError);
}

}  // namespace
}  // namespace synthdag::dag
