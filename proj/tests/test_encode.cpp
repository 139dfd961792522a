#include <gtest/gtest.h>

#include "cutoff/encode.hpp"
#include "cutoff/speclang.hpp"
#include "cutoff/structure.hpp"
#include "formula_gen.hpp"
#include "zexclude_check.hpp"

using namespace cutoff;

namespace {

Vocabulary node_vocab() {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  v.add_symbol({"root", SymbolKind::Constant, {}, "node", false});
  v.add_symbol({"parent", SymbolKind::Function, {"node"}, "node", true});
  v.add_symbol({"on", SymbolKind::Relation, {"node"}, "", true});
  return v;
}

const Variable X{"X", "node"};
const Variable Z{kDeletionVar, "node"};

}  // namespace

TEST(ZExclude, GuardsQuantifiersOverTheDeletedSort) {
  Vocabulary v = node_vocab();
  auto on = [&](TermPtr t) { return mk_pred(v.symbol("on"), {t}); };
  EXPECT_EQ(to_string(z_exclude(mk_forall(X, on(mk_var(X))), Z)), "forall X:node. X != z -> on(X)");
  EXPECT_EQ(to_string(z_exclude(mk_exists(X, on(mk_var(X))), Z)), "exists X:node. X != z & on(X)");
  // Quantifier-free formulas are unchanged.
  auto atom = on(mk_app(v.symbol("root"), {}));
  EXPECT_TRUE(equal(z_exclude(atom, Z), atom));
  // Other sorts are untouched.
  Variable other{"z", "thread"};
  EXPECT_TRUE(equal(z_exclude(mk_forall(X, on(mk_var(X))), other), mk_forall(X, on(mk_var(X)))));
}

TEST(ZExclude, RejectsFormulasMentioningZ) {
  Vocabulary v = node_vocab();
  Variable z2{"z", "node"};
  EXPECT_THROW(z_exclude(mk_forall(z2, mk_pred(v.symbol("on"), {mk_var(z2)})), Z), IllFormed);
}

// Evaluating the guarded formula with z := d0 on a structure agrees with the
// original on the substructure without d0.
TEST(ZExclude, AgreesWithDeletionOnSmallStructures) {
  Vocabulary v = fgen::two_sorted_vocab();
  fgen::FormulaGen gen(v, 2024);
  std::vector<FormulaPtr> pool;
  for (int i = 0; i < 200; ++i) pool.push_back(gen.closed(3));
  auto stats = fgen::check_z_exclusion(pool, 2);
  EXPECT_EQ(stats.mismatches, 0u) << stats.first_mismatch;
  EXPECT_GT(stats.cases, 500u);
}

TEST(Cardinality, SizeFormulasCountElements) {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  auto sig = std::make_shared<Signature>(v);
  for (int64_t n = 1; n <= 5; ++n) {
    Structure s(sig, {n});
    for (int64_t k = 0; k <= 3; ++k) {
      EXPECT_EQ(eval(s, {}, size_gt("node", k)), n > k) << n << " " << k;
      EXPECT_EQ(eval(s, {}, size_le("node", k)), n <= k) << n << " " << k;
    }
  }
  EXPECT_THROW(size_gt("node", -1), IllFormed);
}

TEST(Eta, AssemblesConditionAndEveryUpdate) {
  Vocabulary v = node_vocab();
  HighLowUpdate u;
  u.sort = "node";
  u.bound = 1;
  u.condition = mk_neq(mk_var(Z), mk_app(v.symbol("root"), {}, Tag::High));
  u.invariant = mk_forall(X, mk_pred(v.symbol("on"), {mk_var(X)}, Tag::High));
  HighLowUpdate d = apply_defaults(u, v);
  EtaFormula eta = build_eta(d, v);
  EXPECT_EQ(eta.relation_parts.size(), 1u);
  EXPECT_EQ(eta.function_parts.size(), 2u);
  EXPECT_EQ(conjuncts(eta.theta).size(), 2u);
  EXPECT_EQ(free_variables(eta.formula), std::set<Variable>{Z});
  auto tags = tags_of(eta.formula);
  EXPECT_TRUE(tags.count(Tag::High));
  EXPECT_TRUE(tags.count(Tag::Low));
  EXPECT_FALSE(tags.count(Tag::Plain));
  // Missing updates are an error before defaults apply.
  EXPECT_THROW(build_eta(u, v), IllFormed);
}

TEST(Frames, IdleCoversMutableSymbolsOnly) {
  Vocabulary v = node_vocab();
  auto idle = idle_formula(v);
  EXPECT_EQ(conjuncts(idle).size(), 2u);
  auto syms = symbols_of(idle);
  EXPECT_FALSE(syms.count({"root", Tag::Plain}));
  EXPECT_TRUE(syms.count({"parent", Tag::Primed}));
}

TEST(Frames, ClosureKeepsFunctionsAwayFromZ) {
  Vocabulary v = node_vocab();
  auto c = closure_formula(v, Z);
  EXPECT_EQ(conjuncts(c).size(), 2u);
  auto sig = std::make_shared<Signature>(v);
  sig->add_all({Tag::Plain});
  Structure s(sig, {3});
  s.set("root", Tag::Plain, {}, 0);
  for (int64_t i = 0; i < 3; ++i) s.set("parent", Tag::Plain, {i}, 0);
  EXPECT_TRUE(eval(s, {{Z, 2}}, c));
  EXPECT_FALSE(eval(s, {{Z, 0}}, c));
  s.set("parent", Tag::Plain, {1}, 2);
  EXPECT_FALSE(eval(s, {{Z, 2}}, c));
  s.set("parent", Tag::Plain, {2}, 2);  // z's own image does not matter
  s.set("parent", Tag::Plain, {1}, 0);
  EXPECT_TRUE(eval(s, {{Z, 2}}, c));
}
