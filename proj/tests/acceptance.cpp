// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "cutoff/encode.hpp"
#include "cutoff/oracle.hpp"
#include "cutoff/pipeline.hpp"
#include "formula_gen.hpp"
#include "zexclude_check.hpp"

using namespace cutoff;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string corpus_path(const std::string& name) { return std::string(CUTOFF_CORPUS_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

VerifyOptions options(int jobs = 0, int64_t window = 3) {
  VerifyOptions o;
  o.solver = solver_from(std::nullopt, 60000);
  o.jobs = jobs;
  o.int_window = window;
  return o;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

const VcOutcome* outcome(const VerificationReport& r, const std::string& prefix) {
  for (const auto& st : r.stages)
    for (const auto& vc : st.vcs)
      if (vc.id.rfind(prefix, 0) == 0) return &vc;
  return nullptr;
}

bool all_valid(const VerificationReport& r) {
  for (const auto& st : r.stages)
    for (const auto& vc : st.vcs)
      if (vc.result.verdict != Verdict::Valid) return false;
  return true;
}

std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(CUTOFF_CORPUS_DIR))
    if (e.path().extension() == ".spec") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

// Replays a trace: the first state is initial, each step satisfies its
// transition, the last state violates safety.
bool replay(const ProtocolSpec& spec, const Trace& trace, std::string& why) {
  if (trace.steps.empty()) {
    why = "empty trace";
    return false;
  }
  const Structure& first = trace.steps.front().state;
  if (!eval(first, {}, mk_and(spec.gamma(), spec.iota()))) {
    why = "first state is not initial";
    return false;
  }
  auto sig = std::make_shared<Signature>(spec.vocab);
  sig->add_all({Tag::Plain, Tag::Primed});
  const Signature& plain = first.signature();
  for (size_t i = 1; i < trace.steps.size(); ++i) {
    const auto& pre = trace.steps[i - 1].state;
    const auto& post = trace.steps[i].state;
    Structure two(sig, pre.sizes(), pre.int_window());
    for (size_t slot = 0; slot < plain.slot_count(); ++slot) {
      const auto& info = plain.info(static_cast<int>(slot));
      two.table(sig->slot(info.symbol, Tag::Plain)).data = pre.table(static_cast<int>(slot)).data;
      two.table(sig->slot(info.symbol, Tag::Primed)).data = post.table(static_cast<int>(slot)).data;
    }
    const TransitionDef* t = spec.find_transition(trace.steps[i].transition);
    if (!t) {
      why = "unknown transition in trace";
      return false;
    }
    Assignment a;
    for (const auto& [v, val] : trace.steps[i].args) a[v] = val;
    if (!eval(two, a, t->body())) {
      why = "step " + std::to_string(i) + " does not satisfy " + t->name;
      return false;
    }
  }
  if (eval(trace.steps.back().state, {}, spec.safety)) {
    why = "last state is safe";
    return false;
  }
  return true;
}

Outcome tree_termination_end_to_end() {
  auto t = Clock::now();
  VerificationReport r = verify(prepare_file(corpus_path("tree_termination.spec")), options());
  double s = since(t);
  Outcome o;
  o.pass = r.verdict == Overall::Safe && r.caps == std::map<std::string, int64_t>{{"node", 2}} && all_valid(r) &&
           s < 10.0;
  o.detail = std::string(overall_name(r.verdict)) + ", cutoff node:" + std::to_string(r.caps["node"]) + ", " +
             (all_valid(r) ? "all obligations valid" : "some obligation not valid") + ", " + fmt(s);
  return o;
}

Outcome mutation_suite() {
  Outcome o;
  std::vector<std::string> notes;
  {
    Prepared p = prepare_file(corpus_path("tree_termination_broken.spec"));
    VerificationReport r = verify(p, options());
    const VcOutcome* vc = outcome(r, "tau-preservation.terminate");
    bool ok = r.verdict == Overall::VcFailed && vc && vc->result.verdict == Verdict::Invalid && vc->result.model &&
              vc->result.model->verified;
    o.pass &= ok;
    notes.push_back(std::string("trivial ack update ") + (ok ? "caught" : "missed"));
  }
  {
    Prepared p = prepare_file(corpus_path("tree_termination_weak_theta.spec"));
    VerificationReport r = verify(p, options());
    const VcOutcome* vc = outcome(r, "safety-preservation");
    bool ok = r.verdict == Overall::VcFailed && vc && vc->result.verdict == Verdict::Invalid && vc->result.model &&
              vc->result.model->verified;
    o.pass &= ok;
    notes.push_back(std::string("weak condition ") + (ok ? "caught" : "missed"));
  }
  {
    Prepared p = prepare_file(corpus_path("tree_termination_nopre.spec"));
    VerificationReport r = verify(p, options());
    std::string why;
    bool ok = r.verdict == Overall::BoundedUnsafe && r.bounded && r.bounded->trace &&
              r.bounded->trace->steps.back().state.size("node") == 2 && replay(p.original, *r.bounded->trace, why);
    o.pass &= ok;
    notes.push_back(std::string("missing precondition ") + (ok ? "caught" : "missed " + why));
  }
  for (size_t i = 0; i < notes.size(); ++i) o.detail += (i ? "; " : "") + notes[i];
  return o;
}

Outcome z_exclusion_property() {
  auto t = Clock::now();
  Vocabulary v = fgen::two_sorted_vocab();
  fgen::FormulaGen gen(v, 2024);
  std::vector<FormulaPtr> pool;
  for (int i = 0; i < 200; ++i) pool.push_back(gen.closed(3));
  auto stats = fgen::check_z_exclusion(pool, 3);
  Outcome o;
  o.pass = stats.mismatches == 0 && stats.cases > 0;
  o.detail = std::to_string(pool.size()) + " formulas, " + std::to_string(stats.structures) + " structures, " +
             std::to_string(stats.cases) + " deletion cases, " + std::to_string(stats.mismatches) + " mismatches, " +
             fmt(since(t));
  if (!stats.first_mismatch.empty()) o.detail += "\n" + stats.first_mismatch;
  return o;
}

Outcome direct_simulation_check() {
  Prepared p = prepare_file(corpus_path("tree_termination.spec"));
  const PlanStage& st = p.plan.stages.at(0);
  SizeBounds b;
  b.max["node"] = 3;
  SimulationReport r = check_strong_simulation(st.context, st.update, 2, b);
  Outcome o;
  int held = 0;
  for (const auto& item : r.strong) held += item.holds;
  o.pass = r.strong.size() == 5 && r.strong_holds() && r.weak_holds();
  o.detail = std::to_string(held) + "/" + std::to_string(r.strong.size()) + " strong items, weak items " +
             (r.weak_holds() ? "hold" : "fail") + ", " + std::to_string(r.states) + " states";
  for (const auto& item : r.strong)
    if (!item.holds) o.detail += "\n  " + item.name + ": " + item.witness;
  return o;
}

Outcome solver_oracle_agreement() {
  Outcome o;
  int specs = 0, checked = 0, contradictions = 0, guarded = 0;
  for (const auto& name : corpus_files()) {
    Prepared p = prepare_file(corpus_path(name));
    if (p.spec.vocab.has_integer_symbols()) continue;
    ++specs;
    SolverConfig cfg = solver_from(std::nullopt, 60000);
    for (const auto& st : p.plan.stages) {
      for (const auto& vc : st.vcs) {
        SolverResult sr = check(vc, cfg);
        if (sr.verdict != Verdict::Valid) continue;
        SizeBounds b;
        for (const auto& s : vc.vocab.sorts())
          if (s.kind == SortKind::Uninterpreted) b.max[s.name] = 2;
        try {
          ValidityResult vr = bounded_validity_check(vc, b);
          ++checked;
          if (!vr.valid) {
            ++contradictions;
            o.detail += "\n  " + name + " " + vc.id + ": oracle countermodel for a valid obligation";
          }
        } catch (const GuardrailExceeded&) {
          ++guarded;
          o.detail += "\n  " + name + " " + vc.id + ": oracle guardrail";
        }
      }
    }
  }
  o.pass = contradictions == 0 && guarded == 0 && checked > 0;
  o.detail = std::to_string(specs) + " specs, " + std::to_string(checked) + " valid obligations cross-checked, " +
             std::to_string(contradictions) + " contradictions" + o.detail;
  return o;
}

Outcome cardinality_formulas() {
  Vocabulary v;
  v.add_sort({"s", SortKind::Uninterpreted, 0});
  auto sig = std::make_shared<Signature>(v);
  Outcome o;
  int cases = 0;
  for (int64_t n = 1; n <= 5; ++n) {
    Structure st(sig, {n});
    for (int64_t k = 0; k <= 3; ++k) {
      cases += 2;
      if (eval(st, {}, size_gt("s", k)) != (n > k) || eval(st, {}, size_le("s", k)) != (n <= k)) {
        o.pass = false;
        o.detail += "n=" + std::to_string(n) + " k=" + std::to_string(k) + " wrong; ";
      }
    }
  }
  o.detail += std::to_string(cases) + " evaluations";
  return o;
}

struct ExpectedStage {
  std::string sort;
  int64_t k = 0;
  std::string counts;  // "updates=1/3 invariant=yes hints=1/1"
};

Outcome corpus_reproduction() {
  const std::regex stage_re(R"(^# expect-stage: (\w+) k=(\d+) (.*)$)");
  const std::regex window_re(R"(^# expect-int-window: (\d+)$)");
  const std::set<std::string> single{"tree_termination.spec", "lock_server.spec", "plus_minus.spec",
                                     "list_token.spec"};
  Outcome o;
  int reproduced = 0, total = 0;
  for (const auto& name : corpus_files()) {
    std::vector<ExpectedStage> expected;
    int64_t window = 3;
    std::istringstream lines(slurp(corpus_path(name)));
    std::string line;
    std::smatch m;
    while (std::getline(lines, line)) {
      if (std::regex_match(line, m, stage_re)) expected.push_back({m[1], std::stoll(m[2]), m[3]});
      if (std::regex_match(line, m, window_re)) window = std::stoll(m[1]);
    }
    if (expected.empty()) continue;
    ++total;
    const double limit = single.count(name) ? 60.0 : 120.0;
    auto t = Clock::now();
    VerificationReport r = verify(prepare_file(corpus_path(name)), options(0, window));
    double s = since(t);
    bool ok = r.verdict == Overall::Safe && r.stages.size() == expected.size() && s < limit;
    for (size_t i = 0; ok && i < expected.size(); ++i) {
      const auto& st = r.stages[i];
      std::string counts = "updates=" + std::to_string(st.counts.user_updates) + "/" +
                           std::to_string(st.counts.updatable_symbols) +
                           " invariant=" + (st.counts.invariant ? "yes" : "no") +
                           " hints=" + std::to_string(st.counts.hints) + "/" + std::to_string(st.counts.transitions);
      ok = st.sort == expected[i].sort && st.k == expected[i].k && counts == expected[i].counts;
    }
    reproduced += ok;
    std::string stages;
    for (const auto& st : r.stages) stages += (stages.empty() ? "" : ",") + st.sort + ":" + std::to_string(st.k);
    o.detail += "\n  " + name + ": " + overall_name(r.verdict) + " " + stages + " in " + fmt(s) +
                (ok ? "" : " (expected differently)");
    o.pass &= ok;
  }
  o.pass &= total >= 8;
  o.detail = std::to_string(reproduced) + "/" + std::to_string(total) + " examples reproduced" + o.detail;
  return o;
}

nlohmann::json without_times(nlohmann::json j) {
  std::function<void(nlohmann::json&)> strip = [&](nlohmann::json& x) {
    if (x.is_object()) {
      x.erase("seconds");
      for (auto& [k, v] : x.items()) strip(v);
    } else if (x.is_array()) {
      for (auto& v : x) strip(v);
    }
  };
  strip(j);
  return j;
}

Outcome determinism() {
  Outcome o;
  int files = 0;
  for (const auto& name : corpus_files()) {
    auto a = emit_files(prepare_file(corpus_path(name)));
    auto b = emit_files(prepare_file(corpus_path(name)));
    files += static_cast<int>(a.size());
    if (a != b) {
      o.pass = false;
      o.detail += name + " emits differently; ";
    }
  }
  // One CLI round trip through the file system as well.
  fs::path d1 = fs::temp_directory_path() / "cutoff-acceptance-emit-1";
  fs::path d2 = fs::temp_directory_path() / "cutoff-acceptance-emit-2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  for (const auto& d : {d1, d2}) {
    std::string cmd = std::string(CUTOFF_CLI) + " emit --emit-dir " + d.string() + " " +
                      corpus_path("toy_consensus.spec") + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      o.pass = false;
      o.detail += "emit command failed; ";
    }
  }
  if (fs::exists(d1)) {
    for (const auto& e : fs::directory_iterator(d1))
      if (slurp(e.path().string()) != slurp((d2 / e.path().filename()).string())) {
        o.pass = false;
        o.detail += e.path().filename().string() + " differs on disk; ";
      }
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
  int reports = 0;
  for (const char* name : {"lock_server.spec", "toy_consensus.spec", "tree_termination_broken.spec"}) {
    Prepared p = prepare_file(corpus_path(name));
    std::string one = without_times(report_json(verify(p, options(1)))).dump();
    std::string many = without_times(report_json(verify(p, options(8)))).dump();
    ++reports;
    if (one != many) {
      o.pass = false;
      o.detail += std::string(name) + " report depends on jobs; ";
    }
  }
  o.detail += std::to_string(files) + " emitted files stable, " + std::to_string(reports) +
              " reports identical at 1 and 8 jobs";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "tree termination end to end", tree_termination_end_to_end},
      {2, "mutations flip the verdict", mutation_suite},
      {3, "z-exclusion agrees with deletion", z_exclusion_property},
      {4, "direct simulation check", direct_simulation_check},
      {5, "solver and oracle agree", solver_oracle_agreement},
      {6, "cardinality formulas", cardinality_formulas},
      {7, "corpus verdicts and bounds", corpus_reproduction},
      {8, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.title << "): " << o.detail
              << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
