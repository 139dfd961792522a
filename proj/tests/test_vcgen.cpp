#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cutoff/encode.hpp"
#include "cutoff/pipeline.hpp"
#include "cutoff/vcgen.hpp"

using namespace cutoff;

namespace {

std::string corpus_path(const std::string& name) { return std::string(CUTOFF_CORPUS_DIR) + "/" + name; }

std::vector<std::string> ids(const std::vector<VerificationCondition>& vcs) {
  std::vector<std::string> out;
  for (const auto& vc : vcs) out.push_back(vc.id);
  return out;
}

bool has_conjunct(const std::vector<FormulaPtr>& hyps, const FormulaPtr& f) {
  return std::any_of(hyps.begin(), hyps.end(), [&](const FormulaPtr& h) { return equal(h, f); });
}

std::string tree_text() {
  std::ifstream in(corpus_path("tree_termination.spec"));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Generate, SevenObligationsInOrder) {
  Prepared p = prepare_file(corpus_path("tree_termination.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  auto vcs = generate_vcs(st.context, st.update, st.k);
  EXPECT_EQ(ids(vcs), (std::vector<std::string>{"iota-preservation", "tau-preservation", "safety-preservation",
                                                "projectability", "gamma-preservation", "theta-initiation",
                                                "theta-consecution"}));
  for (const auto& vc : vcs) {
    SCOPED_TRACE(vc.id);
    EXPECT_TRUE(free_variables(vc.formula()).empty());
    check_well_sorted(vc.formula(), vc.vocab);
  }
}

TEST(Generate, ThetaInitiationNeedsMoreThanKElements) {
  Prepared p = prepare_file(corpus_path("tree_termination.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  auto vcs = generate_vcs(st.context, st.update, st.k);
  const auto& init = vcs[5];
  EXPECT_TRUE(init.params.empty());
  EXPECT_TRUE(has_conjunct(init.hypotheses, size_gt("node", 2)));
  EXPECT_EQ(init.conclusion->kind, Formula::Kind::Exists);
  EXPECT_EQ(init.conclusion->bound.name, kDeletionVar);
  // Only the high copy occurs: no low state exists yet.
  auto tags = tags_of(init.formula());
  EXPECT_FALSE(tags.count(Tag::Low));
}

TEST(Generate, FaultConclusionUsesTheUnskolemizedProperty) {
  Prepared p = prepare_file(corpus_path("tree_termination.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  auto vcs = generate_vcs(st.context, st.update, st.k);
  const auto& fault = vcs[2];
  EXPECT_TRUE(symbols_of(fault.hypothesis()).count({"n_sk", Tag::High}));
  EXPECT_FALSE(symbols_of(fault.conclusion).count({"n_sk", Tag::Low}));
  EXPECT_TRUE(tags_of(fault.conclusion) == std::set<Tag>{Tag::Low});
}

TEST(Split, OneObligationPerTransitionWithParameters) {
  Prepared p = prepare_file(corpus_path("lock_server.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  int tau = 0, cons = 0;
  for (const auto& vc : st.vcs) {
    if (vc.kind == VcKind::TauPreservation) {
      ++tau;
      EXPECT_EQ(vc.part, VcPart::StutterIncluded);
      const TransitionDef* t = p.spec.find_transition(vc.transition);
      ASSERT_NE(t, nullptr);
      EXPECT_EQ(vc.params.size(), 1 + t->params.size());
      EXPECT_EQ(vc.id, "tau-preservation." + vc.transition + ".stutter-included");
    }
    if (vc.kind == VcKind::ThetaConsecution) ++cons;
  }
  EXPECT_EQ(tau, 5);
  EXPECT_EQ(cons, 5);
}

TEST(Hints, FunctionalHintSkipsTotality) {
  Prepared p = prepare_file(corpus_path("tree_termination.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  EXPECT_TRUE(hint_is_functional(st.update.hints.at("terminate")));
  EXPECT_EQ(ids(st.vcs), (std::vector<std::string>{"iota-preservation", "tau-preservation.terminate.hint-sufficiency",
                                                   "safety-preservation", "projectability", "gamma-preservation",
                                                   "theta-initiation", "theta-consecution.terminate"}));
  const auto& suff = st.vcs[1];
  EXPECT_EQ(suff.part, VcPart::HintSufficiency);
  // z, the high argument and the low argument.
  EXPECT_EQ(suff.params.size(), 3u);
}

TEST(Hints, RelationalHintAddsTotality) {
  std::string text = tree_text();
  const std::string from = "= nl = nh";
  text.replace(text.find(from), from.size(), "= nl = nh | leq(nl, nh) & nl != z");
  Prepared p = prepare_text(text);
  const PlanStage& st = p.plan.stages.at(0);
  EXPECT_FALSE(hint_is_functional(st.update.hints.at("terminate")));
  auto all = ids(st.vcs);
  auto total = std::find(all.begin(), all.end(), "tau-preservation.terminate.hint-totality");
  ASSERT_NE(total, all.end());
  EXPECT_EQ(*(total + 1), "tau-preservation.terminate.hint-sufficiency");
  EXPECT_EQ(st.vcs[total - all.begin()].part, VcPart::HintTotality);
}

TEST(Hints, MismatchedTransitionIsIllFormed) {
  Prepared p = prepare_file(corpus_path("lock_server.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  auto split = split_per_transition(generate_vcs(st.context, st.update, st.k), st.context, st.update);
  Hint h;
  h.transition = "nonexistent";
  h.formula = mk_true();
  EXPECT_THROW(apply_hint(split[1], h, st.context, st.update), IllFormed);
}

TEST(Plan, EarlierCapsAreAssumedLater) {
  Prepared p = prepare_file(corpus_path("echo_machine.spec"));
  ASSERT_EQ(p.plan.stages.size(), 2u);
  EXPECT_EQ(p.plan.stages[0].label, "1-round");
  EXPECT_TRUE(p.plan.stages[0].injected.empty());
  EXPECT_EQ(p.plan.stages[1].injected, (std::vector<std::pair<std::string, int64_t>>{{"round", 3}}));
  EXPECT_TRUE(has_conjunct(p.plan.stages[1].context.gamma, size_le("round", 3)));
  EXPECT_EQ(p.plan.final_caps, (std::map<std::string, int64_t>{{"round", 3}, {"value", 2}}));
}

TEST(Plan, ExtensionsGetASoundnessObligation) {
  Prepared p = prepare_file(corpus_path("toy_consensus.spec"));
  ASSERT_EQ(p.plan.stages.size(), 3u);
  const auto& last = p.plan.stages[2];
  EXPECT_TRUE(has_conjunct(last.context.gamma, size_le("value", 2)));
  EXPECT_TRUE(has_conjunct(last.context.gamma, size_le("quorum", 2)));
  ASSERT_FALSE(last.vcs.empty());
  EXPECT_EQ(last.vcs.front().kind, VcKind::ExtensionSoundness);
  EXPECT_TRUE(last.context.vocab.find_symbol("qa") != nullptr);
  EXPECT_FALSE(p.plan.stages[1].context.vocab.find_symbol("qa") != nullptr);
}

TEST(Plan, RejectsIncompleteOrRepeatedStages) {
  const std::string head = "sort a\nsort b\nrelation r(a, b)\nsafety forall X: a, Y: b. r(X, Y) | !r(X, Y)\n";
  EXPECT_THROW(prepare_text(head + "stage a\nbound a 1\n"), Diagnostic);
  EXPECT_THROW(prepare_text(head + "stage a\nbound a 1\nstage a\nbound a 2\nstage b\nbound b 1\n"), Diagnostic);
  EXPECT_NO_THROW(prepare_text(head + "stage a\nbound a 1\nstage b\nbound b 1\n"));
}
