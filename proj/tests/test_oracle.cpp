#include <gtest/gtest.h>

#include "cutoff/oracle.hpp"
#include "cutoff/pipeline.hpp"

using namespace cutoff;

namespace {

Prepared corpus(const std::string& name) { return prepare_file(std::string(CUTOFF_CORPUS_DIR) + "/" + name); }

SizeBounds up_to(const std::string& sort, int64_t n) {
  SizeBounds b;
  b.max[sort] = n;
  return b;
}

const VerificationCondition& vc_named(const Prepared& p, const std::string& id) {
  for (const auto& st : p.plan.stages)
    for (const auto& vc : st.vcs)
      if (vc.id == id) return vc;
  throw std::runtime_error("no obligation " + id);
}

uint64_t count_structures(const Vocabulary& v, const SizeBounds& b, const FormulaPtr& constraint) {
  return enumerate_structures(v, b, constraint, [](const Structure&) { return true; });
}

}  // namespace

TEST(Enumerate, OneUnaryRelationUpToTwoElements) {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  v.add_symbol({"on", SymbolKind::Relation, {"node"}, "", true});
  // 2 tables at size 1, 4 at size 2.
  EXPECT_EQ(count_structures(v, up_to("node", 2), mk_true()), 6u);
}

TEST(Enumerate, FunctionsAndConstraints) {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  v.add_symbol({"f", SymbolKind::Function, {"node"}, "node", true});
  v.add_symbol({"c", SymbolKind::Constant, {}, "node", true});
  // n^n functions times n constants: 1 + 8 + 81.
  EXPECT_EQ(count_structures(v, up_to("node", 3), mk_true()), 90u);
  // f(c) = c leaves n^(n-1) functions per constant.
  auto c = mk_app(v.symbol("c"), {});
  EXPECT_EQ(count_structures(v, up_to("node", 3), mk_eq(mk_app(v.symbol("f"), {c}), c)), 1u + 4u + 27u);
}

TEST(Enumerate, TreeAxiomsAtSmallSizes) {
  Prepared p = corpus("tree_termination.spec");
  const auto& spec = p.original;
  // One element: leq is forced, termd and ack are free.
  EXPECT_EQ(count_structures(spec.vocab, up_to("node", 1), spec.gamma()), 4u);
  // Two elements: the root decides leq; 4 termd tables and 16 ack tables each.
  EXPECT_EQ(count_structures(spec.vocab, up_to("node", 2), spec.gamma()), 4u + 2u * 4u * 16u);
}

TEST(Enumerate, GuardrailStopsHugeSearches) {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  v.add_symbol({"e", SymbolKind::Relation, {"node", "node", "node"}, "", true});
  SizeBounds b = up_to("node", 4);
  b.ceiling = 1000;
  EXPECT_THROW(count_structures(v, b, mk_true()), GuardrailExceeded);
}

TEST(BoundedSafety, TreeTerminationIsSafeUpToFourNodes) {
  Prepared p = corpus("tree_termination.spec");
  SafetyResult r = bounded_safety_check(p.original, up_to("node", 4));
  EXPECT_TRUE(r.safe);
  EXPECT_GT(r.states, 0u);
  EXPECT_FALSE(r.window_relative);
}

TEST(BoundedSafety, MissingPreconditionGivesShortTrace) {
  Prepared p = corpus("tree_termination_nopre.spec");
  SafetyResult r = bounded_safety_check(p.original, up_to("node", 2));
  ASSERT_FALSE(r.safe);
  ASSERT_TRUE(r.trace);
  // Initial state, then the root terminates before its child.
  ASSERT_EQ(r.trace->steps.size(), 2u);
  EXPECT_EQ(r.trace->steps[1].transition, "terminate");
  const Structure& last = r.trace->steps.back().state;
  EXPECT_EQ(last.size("node"), 2);
  EXPECT_FALSE(eval(last, {}, p.original.safety));
  EXPECT_NE(render_trace(*r.trace).find("terminate"), std::string::npos);
}

TEST(BoundedValidity, AgreesOnTreeTerminationObligations) {
  Prepared p = corpus("tree_termination.spec");
  for (const auto& vc : p.plan.stages[0].vcs) {
    SCOPED_TRACE(vc.id);
    EXPECT_TRUE(bounded_validity_check(vc, up_to("node", 3)).valid);
  }
}

TEST(BoundedValidity, TrivialAckUpdateHasCountermodelAtThree) {
  Prepared p = corpus("tree_termination_broken.spec");
  const auto& vc = vc_named(p, "tau-preservation.terminate.hint-sufficiency");
  EXPECT_TRUE(bounded_validity_check(vc, up_to("node", 2)).valid);
  ValidityResult r = bounded_validity_check(vc, up_to("node", 3));
  ASSERT_FALSE(r.valid);
  ASSERT_TRUE(r.countermodel);
  // The countermodel falsifies the implication.
  std::vector<int64_t> params;
  for (const auto& v : vc.params) params.push_back(r.countermodel->params.at(v));
  const auto& sig = r.countermodel->structure.signature();
  Compiled negated(sig, mk_and(vc.hypothesis(), mk_not(vc.conclusion)), vc.params);
  EXPECT_TRUE(negated.holds(r.countermodel->structure, params));
}

TEST(BoundedValidity, WeakConditionHasFaultCountermodel) {
  Prepared p = corpus("tree_termination_weak_theta.spec");
  ValidityResult r = bounded_validity_check(vc_named(p, "safety-preservation"), up_to("node", 2));
  EXPECT_FALSE(r.valid);
}

TEST(Simulation, TreeTerminationSatisfiesEveryItem) {
  Prepared p = corpus("tree_termination.spec");
  const PlanStage& st = p.plan.stages[0];
  SimulationReport r = check_strong_simulation(st.context, st.update, st.k, up_to("node", 3));
  ASSERT_EQ(r.strong.size(), 5u);
  for (const auto& item : r.strong) {
    EXPECT_TRUE(item.holds) << item.name << ": " << item.witness;
    EXPECT_GT(item.checked, 0u) << item.name;
  }
  EXPECT_TRUE(r.strong_holds());
  EXPECT_TRUE(r.weak_holds());
  EXPECT_GT(r.pairs, 0u);
}

// Whatever the strong items say, holding them must imply the plain items.
TEST(Simulation, StrongImpliesWeakOnMutations) {
  for (const char* name : {"tree_termination.spec", "tree_termination_broken.spec", "tree_termination_weak_theta.spec",
                           "tree_termination_nopre.spec"}) {
    SCOPED_TRACE(name);
    Prepared p = corpus(name);
    const PlanStage& st = p.plan.stages[0];
    SimulationReport r = check_strong_simulation(st.context, st.update, st.k, up_to("node", 3));
    if (r.strong_holds()) {
      EXPECT_TRUE(r.weak_holds());
    }
  }
}

TEST(Simulation, TrivialAckUpdateBreaksStepPreservation) {
  Prepared p = corpus("tree_termination_broken.spec");
  const PlanStage& st = p.plan.stages[0];
  SimulationReport r = check_strong_simulation(st.context, st.update, st.k, up_to("node", 3));
  EXPECT_FALSE(r.strong_holds());
}

// Safe at the cutoff, a valid simulation: larger instances stay safe too.
TEST(Simulation, SafetyTransfersBeyondTheCutoff) {
  Prepared p = corpus("tree_termination.spec");
  const PlanStage& st = p.plan.stages[0];
  ASSERT_TRUE(check_strong_simulation(st.context, st.update, st.k, up_to("node", 3)).strong_holds());
  ASSERT_TRUE(bounded_safety_check(p.original, up_to("node", st.k)).safe);
  EXPECT_TRUE(bounded_safety_check(p.original, up_to("node", 5)).safe);
}
