#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cutoff/encode.hpp"
#include "cutoff/speclang.hpp"

using namespace cutoff;

namespace {

std::string corpus(const std::string& name) {
  std::ifstream in(std::string(CUTOFF_CORPUS_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<std::string> conjunct_texts(const FormulaPtr& f) {
  std::set<std::string> out;
  for (const auto& c : conjuncts(f)) out.insert(to_string(c));
  return out;
}

const char* kSmall = R"(sort node
relation on(node)
init !on(X)
transition flip(n: node)
  forall X. on'(X) <-> on(X) | X = n
safety forall X. on(X) | !on(X)
)";

}  // namespace

TEST(Parser, ReadsTreeTermination) {
  ParsedSpec p = parse_spec(corpus("tree_termination.spec"));
  const auto& spec = p.spec;
  EXPECT_EQ(spec.vocab.sorts().size(), 1u);
  EXPECT_EQ(spec.axioms.size(), 4u);
  EXPECT_EQ(spec.inits.size(), 2u);
  ASSERT_EQ(spec.transitions.size(), 1u);
  EXPECT_EQ(spec.transitions[0].name, "terminate");
  EXPECT_EQ(spec.transitions[0].assumes.size(), 1u);
  EXPECT_EQ(spec.transitions[0].clauses.size(), 2u);
  ASSERT_EQ(p.task.stages.size(), 1u);
  const auto& st = p.task.stages[0];
  EXPECT_EQ(st.sort, "node");
  EXPECT_EQ(st.bound, 2);
  EXPECT_TRUE(st.relations.count("ack"));
  EXPECT_TRUE(st.hints.count("terminate"));
  EXPECT_TRUE(st.invariant);
  EXPECT_FALSE(spec.vocab.symbol("leq").is_mutable);
  EXPECT_TRUE(spec.vocab.symbol("ack").is_mutable);
}

TEST(Parser, ImplicitClosureOfCapitalizedVariables) {
  ParsedSpec p = parse_spec(kSmall);
  EXPECT_TRUE(free_variables(p.spec.inits[0]).empty());
  EXPECT_EQ(p.spec.inits[0]->kind, Formula::Kind::Forall);
}

TEST(Parser, DiagnosticsCarryPositions) {
  try {
    parse_spec("sort node\nrelation on(node)\ninit on(X) & off(X)\n");
    FAIL() << "expected a diagnostic";
  } catch (const Diagnostic& d) {
    EXPECT_EQ(d.line(), 3);
    EXPECT_EQ(d.column(), 14);
    EXPECT_NE(d.message().find("off"), std::string::npos);
  }
  EXPECT_THROW(parse_spec("sort node\nrelation on(node, thread)\n"), Diagnostic);
  EXPECT_THROW(parse_spec("sort node\nrelation on(node)\ninit on(X) &\n"), Diagnostic);
  EXPECT_THROW(parse_spec("sort node\nrelation a__b(node)\n"), Diagnostic);
  EXPECT_THROW(parse_spec("sort node\nrelation z(node)\n"), Diagnostic);
  EXPECT_THROW(parse_spec(std::string(kSmall) + "safety true\n"), Diagnostic);
}

TEST(Parser, RejectsPrimesOutsideTransitionClauses) {
  EXPECT_THROW(parse_spec("sort node\nrelation on(node)\ninit on'(X)\n"), Diagnostic);
  EXPECT_THROW(parse_spec("sort node\nrelation on(node)\ntransition t(n: node)\n  assume on'(n)\n"), Diagnostic);
}

TEST(Parser, StageItemsAreChecked) {
  std::string base = kSmall;
  EXPECT_THROW(parse_spec(base + "bound thread 2\n"), Diagnostic);
  EXPECT_THROW(parse_spec(base + "update on(x: node) = on(x)\n"), Diagnostic);
  EXPECT_THROW(parse_spec(base + "update on(x: node, z: node) = on(x)\nupdate on(y: node, z: node) = on(y)\n"),
               Diagnostic);
  EXPECT_THROW(parse_spec(base + "hint flip(a: node, z: node) = true\n"), Diagnostic);
  EXPECT_NO_THROW(parse_spec(base + "hint flip(a: node, b: node, z: node) = a = b\n"));
  EXPECT_THROW(parse_spec(base + "invariant true\n"), Diagnostic);  // no stage named yet
}

TEST(Definitions, ExpandInline) {
  ParsedSpec p = parse_spec(corpus("tree_termination.spec"));
  ProtocolSpec e = expand_definitions(p.spec);
  for (const auto& ref : symbols_of(e.transitions[0].body())) EXPECT_NE(ref.name, "child");
}

TEST(Definitions, CyclesAreRejected) {
  ProtocolSpec spec = parse_spec(kSmall).spec;
  Variable x{"x", "node"};
  spec.definitions.push_back({"d1", {x}, mk_pred_raw("d2", {mk_var(x)}, Tag::Plain, false)});
  spec.definitions.push_back({"d2", {x}, mk_pred_raw("d1", {mk_var(x)}, Tag::Plain, false)});
  spec.inits.push_back(mk_forall(x, mk_pred_raw("d1", {mk_var(x)}, Tag::Plain, false)));
  EXPECT_THROW(expand_definitions(spec), Diagnostic);
}

TEST(Skolem, NegatedSafetyWitnessBecomesConstant) {
  ParsedSpec p = parse_spec(corpus("tree_termination.spec"));
  ProtocolSpec sk = skolemize_safety(expand_definitions(p.spec));
  ASSERT_EQ(sk.skolem_constants, std::vector<std::string>{"n_sk"});
  EXPECT_FALSE(sk.vocab.symbol("n_sk").is_mutable);
  EXPECT_EQ(to_string(nnf(mk_not(sk.safety))), "termd(root) & !termd(n_sk)");
  EXPECT_TRUE(sk.unskolemized_safety);
}

TEST(Skolem, SeveralWitnessesPerSortAreNumbered) {
  ParsedSpec p = parse_spec(corpus("lock_server.spec"));
  ProtocolSpec sk = skolemize_safety(p.spec);
  EXPECT_EQ(sk.skolem_constants, (std::vector<std::string>{"n1_sk", "n2_sk"}));
}

TEST(Skolem, ExistentialUnderUniversalIsRejected) {
  std::string text = "sort node\nrelation e(node, node)\nsafety exists X. forall Y. e(X, Y)\n";
  EXPECT_THROW(skolemize_safety(parse_spec(text).spec), Diagnostic);
}

TEST(Skolem, QuantifierFreeSafetyIsUnchanged) {
  ParsedSpec p = parse_spec(corpus("plus_minus.spec"));
  ProtocolSpec sk = skolemize_safety(p.spec);
  EXPECT_TRUE(sk.skolem_constants.empty());
  EXPECT_TRUE(equal(sk.safety, p.spec.safety));
}

TEST(Defaults, ConditionAndBoundFromImmutableConstants) {
  std::string text = corpus("tree_termination.spec");
  // Drop the explicit bound and condition.
  for (const char* line : {"bound node 2\n", "condition(z: node) = z != n_sk & z != root\n"}) {
    auto at = text.find(line);
    ASSERT_NE(at, std::string::npos);
    text.erase(at, std::string(line).size());
  }
  ParsedSpec p = parse_spec(text);
  ProtocolSpec sk = skolemize_safety(expand_definitions(p.spec));
  HighLowUpdate u = apply_defaults(p.task.stages[0], sk.vocab);
  EXPECT_EQ(u.bound, 2);
  EXPECT_EQ(conjunct_texts(u.condition), (std::set<std::string>{"z != root@h", "z != n_sk@h"}));
  // Every symbol has an update; the defaults copy the high interpretation.
  EXPECT_EQ(u.relations.size(), 3u);
  EXPECT_FALSE(u.relations.at("termd").user);
  EXPECT_TRUE(u.relations.at("ack").user);
  EXPECT_EQ(u.functions.size(), 2u);
  EXPECT_EQ(to_string(u.functions.at("root").term), "root@h");
}

TEST(Defaults, NoConstantsMeansTrueCondition) {
  ParsedSpec p = parse_spec(std::string(kSmall) + "bound node 1\n");
  HighLowUpdate u = apply_defaults(p.task.stages[0], p.spec.vocab);
  EXPECT_EQ(u.condition->kind, Formula::Kind::True);
}

TEST(Counts, TreeTerminationSummary) {
  ParsedSpec p = parse_spec(corpus("tree_termination.spec"));
  UpdateCounts c = count_updates(p.task.stages[0], p.spec);
  EXPECT_EQ(c.user_updates, 1);
  EXPECT_EQ(c.updatable_symbols, 3);
  EXPECT_EQ(c.hints, 1);
  EXPECT_EQ(c.transitions, 1);
  EXPECT_TRUE(c.invariant);
}

TEST(Printer, RoundTripsEveryCorpusFile) {
  for (const char* name : {"tree_termination.spec", "lock_server.spec", "list_token.spec", "plus_minus.spec",
                           "echo_machine.spec", "toy_consensus.spec", "equal_sum.spec", "equal_sum_orders.spec"}) {
    SCOPED_TRACE(name);
    ParsedSpec a = parse_spec(corpus(name));
    std::string once = print_spec(a.spec, a.task);
    ParsedSpec b = parse_spec(once);
    EXPECT_EQ(print_spec(b.spec, b.task), once);
    EXPECT_EQ(b.spec.transitions.size(), a.spec.transitions.size());
    ASSERT_EQ(b.task.stages.size(), a.task.stages.size());
    for (size_t i = 0; i < a.task.stages.size(); ++i) {
      EXPECT_EQ(b.task.stages[i].relations.size(), a.task.stages[i].relations.size());
      EXPECT_EQ(b.task.stages[i].functions.size(), a.task.stages[i].functions.size());
      EXPECT_EQ(b.task.stages[i].hints.size(), a.task.stages[i].hints.size());
    }
  }
}
