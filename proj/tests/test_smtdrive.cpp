#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cutoff/pipeline.hpp"
#include "cutoff/smtdrive.hpp"

using namespace cutoff;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Variable X{"X", "node"};
const Variable N{"n", "node"};

Vocabulary small_vocab() {
  Vocabulary v;
  v.add_sort({"node", SortKind::Uninterpreted, 0});
  v.add_symbol({"on", SymbolKind::Relation, {"node"}, "", true});
  v.add_symbol({"root", SymbolKind::Constant, {}, "node", false});
  return v;
}

// on(n) -> on(root): invalid whenever n != root is possible.
VerificationCondition small_vc(bool valid) {
  Vocabulary v = small_vocab();
  VerificationCondition vc;
  vc.id = valid ? "small-valid" : "small-invalid";
  vc.params = {N};
  vc.vocab = v;
  auto root = mk_app(v.symbol("root"), {}, Tag::High);
  vc.hypotheses = {mk_pred(v.symbol("on"), {mk_var(N)}, Tag::High)};
  if (valid) vc.hypotheses.push_back(mk_eq(mk_var(N), root));
  vc.conclusion = mk_pred(v.symbol("on"), {root}, Tag::High);
  return vc;
}

const char* kModel = R"((
  ;; universe for node:
  ;;   node!val!0 node!val!1
  (declare-fun node!val!0 () node)
  (declare-fun node!val!1 () node)
  (define-fun n__v () node node!val!1)
  (define-fun root__h () node node!val!0)
  (define-fun on__h ((x!0 node)) Bool (= x!0 node!val!1))
))";

SolverConfig z3() { return solver_from(std::nullopt, 20000); }

}  // namespace

TEST(Mangle, SuffixPerCopy) {
  EXPECT_EQ(mangle("ack", Tag::Plain, false), "ack__s");
  EXPECT_EQ(mangle("ack", Tag::Primed, false), "ack__p");
  EXPECT_EQ(mangle("ack", Tag::High, false), "ack__h");
  EXPECT_EQ(mangle("ack", Tag::LowPrimed, false), "ack__lp");
  EXPECT_EQ(mangle("leq", Tag::HighPrimed, true), "leq__h");
  EXPECT_EQ(mangle_param("z"), "z__v");
}

TEST(SolverConfigTest, FlagThenEnvironmentThenDefault) {
  EXPECT_EQ(solver_from(std::string("/opt/z3")).command, (std::vector<std::string>{"/opt/z3", "-in"}));
  EXPECT_EQ(solver_from(std::string("cvc5 --lang smt2")).command,
            (std::vector<std::string>{"cvc5", "--lang", "smt2"}));
  ::setenv(kSolverEnv, "/env/z3", 1);
  EXPECT_EQ(solver_from(std::nullopt).command.front(), "/env/z3");
  EXPECT_EQ(solver_from(std::string("z3")).command.front(), "z3");
  ::unsetenv(kSolverEnv);
  EXPECT_EQ(solver_from(std::nullopt).command.front(), "z3");
}

TEST(Emit, QueryShape) {
  std::string q = emit_query(small_vc(false));
  EXPECT_EQ(q.rfind("; small-invalid\n", 0), 0u);
  EXPECT_NE(q.find("(declare-sort node 0)"), std::string::npos);
  EXPECT_NE(q.find("(declare-fun n__v () node)"), std::string::npos);
  EXPECT_NE(q.find("(assert (not (on__h root__h)))"), std::string::npos);
  EXPECT_EQ(q.substr(q.size() - 12), "(check-sat)\n");
  EXPECT_EQ(q, emit_query(small_vc(false)));
}

TEST(Emit, MatchesGoldenFiles) {
  Prepared p = prepare_file(std::string(CUTOFF_CORPUS_DIR) + "/tree_termination.spec");
  auto files = emit_files(p);
  fs::path dir = fs::path(CUTOFF_GOLDEN_DIR) / "tree_termination";
  size_t golden = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++golden;
    auto it = files.find(entry.path().filename().string());
    ASSERT_NE(it, files.end()) << entry.path();
    EXPECT_EQ(it->second, slurp(entry.path())) << entry.path();
  }
  EXPECT_EQ(files.size(), golden);
  EXPECT_EQ(files, emit_files(prepare_file(std::string(CUTOFF_CORPUS_DIR) + "/tree_termination.spec")));
}

TEST(Check, ValidAndInvalidVerdicts) {
  SolverResult ok = check(small_vc(true), z3());
  EXPECT_EQ(ok.verdict, Verdict::Valid);
  EXPECT_FALSE(ok.model);
  SolverResult bad = check(small_vc(false), z3());
  ASSERT_EQ(bad.verdict, Verdict::Invalid);
  ASSERT_TRUE(bad.model);
  const auto& s = bad.model->structure;
  int64_t n = bad.model->params.at(N);
  EXPECT_EQ(s.get("on", Tag::High, {n}), 1);
  EXPECT_EQ(s.get("on", Tag::High, {s.get("root", Tag::High)}), 0);
  EXPECT_NE(render_model(*bad.model).find("high pre-state"), std::string::npos);
}

TEST(Decode, ReadsSolverModelText) {
  CounterModel cm = decode_model(kModel, small_vc(false));
  EXPECT_TRUE(cm.verified);
  EXPECT_EQ(cm.structure.size("node"), 2);
  EXPECT_EQ(cm.params.at(N), 1);
  EXPECT_EQ(cm.structure.get("root", Tag::High), 0);
  EXPECT_EQ(cm.structure.get("on", Tag::High, {1}), 1);
}

TEST(Decode, TamperedModelFailsRevalidation) {
  std::string tampered = kModel;
  const std::string from = "(define-fun n__v () node node!val!1)";
  tampered.replace(tampered.find(from), from.size(), "(define-fun n__v () node node!val!0)");
  EXPECT_THROW(decode_model(tampered, small_vc(false)), DecodeIntegrityError);
}

TEST(Decode, SolverErrorIsInfrastructure) {
  EXPECT_THROW(decode_model("(error \"line 3: unknown constant\")", small_vc(false)), InfrastructureError);
}

TEST(Check, MissingSolverIsInfrastructure) {
  SolverConfig cfg;
  cfg.command = {"/nonexistent/solver-binary"};
  EXPECT_THROW(check(small_vc(true), cfg), InfrastructureError);
  cfg.command = {"/bin/echo", "garbage"};
  EXPECT_THROW(check(small_vc(true), cfg), InfrastructureError);
}

TEST(Check, VersionIsReported) { EXPECT_NE(solver_version(z3()).find("."), std::string::npos); }
