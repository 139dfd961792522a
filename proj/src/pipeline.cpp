#include "cutoff/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace cutoff {

Prepared prepare_text(const std::string& text, const std::string& name) {
  Prepared p;
  p.name = name;
  p.parsed = parse_spec(text);
  p.original = expand_definitions(p.parsed.spec);
  p.spec = skolemize_safety(p.original);
  CutoffTask task;
  for (const auto& st : p.parsed.task.stages) task.stages.push_back(expand_definitions(st, p.parsed.spec));
  p.plan = plan_multisort(p.spec, task);
  return p;
}

Prepared prepare_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Diagnostic("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return prepare_text(ss.str(), std::filesystem::path(path).stem().string());
}

const char* overall_name(Overall v) {
  switch (v) {
    case Overall::Safe: return "SAFE";
    case Overall::VcFailed: return "VC-FAILED";
    case Overall::Inconclusive: return "INCONCLUSIVE";
    case Overall::BoundedUnsafe: return "BOUNDED-UNSAFE";
    case Overall::CutoffOnly: return "CUTOFF-ONLY";
  }
  return "?";
}

int exit_code(Overall v) {
  switch (v) {
    case Overall::Safe: return 0;
    case Overall::VcFailed:
    case Overall::BoundedUnsafe: return 1;
    case Overall::Inconclusive: return 4;
    case Overall::CutoffOnly: return 0;
  }
  return 4;
}

VerificationReport verify(const Prepared& p, const VerifyOptions& options) {
  auto start = std::chrono::steady_clock::now();
  VerificationReport r;
  r.name = p.name;
  for (const auto& w : options.solver.command) r.solver_command += (r.solver_command.empty() ? "" : " ") + w;
  r.solver_version = solver_version(options.solver);

  std::vector<const VerificationCondition*> all;
  for (const auto& st : p.plan.stages) {
    StageReport sr;
    sr.label = st.label;
    sr.sort = st.sort;
    sr.k = st.k;
    sr.injected = st.injected;
    sr.counts = count_updates(st.update, p.original);
    for (const auto& vc : st.vcs) {
      sr.vcs.push_back(VcOutcome{vc.id, vc.kind, {}});
      all.push_back(&vc);
    }
    r.stages.push_back(std::move(sr));
  }

  std::vector<SolverResult> results(all.size());
  std::vector<std::exception_ptr> errors(all.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < all.size();) {
      try {
        results[i] = check(*all[i], options.solver);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned jobs = options.jobs > 0 ? static_cast<unsigned>(options.jobs) : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, std::max<size_t>(all.size(), 1));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  bool failed = false, unknown = false;
  size_t i = 0;
  for (auto& sr : r.stages) {
    for (auto& o : sr.vcs) {
      o.result = std::move(results[i++]);
      failed |= o.result.verdict == Verdict::Invalid;
      unknown |= o.result.verdict == Verdict::Unknown || o.result.verdict == Verdict::Timeout;
    }
  }

  r.caps = p.plan.final_caps;
  for (const auto& [s, n] : options.extra_caps) {
    auto it = r.caps.find(s);
    if (it == r.caps.end()) throw Diagnostic("--max names sort '" + s + "' without a cutoff");
    if (n < it->second) throw Diagnostic("--max " + s + "=" + std::to_string(n) + " is below the cutoff");
    it->second = n;
  }

  bool bounded_unsafe = false;
  if (!options.skip_bounded) {
    SizeBounds b;
    b.max = r.caps;
    b.int_window = options.int_window;
    try {
      r.bounded = bounded_safety_check(p.original, b);
      bounded_unsafe = !r.bounded->safe;
      if (r.bounded->window_relative)
        r.bounded_note = "integer values explored within [-" + std::to_string(options.int_window) + ", " +
                         std::to_string(options.int_window) + "] only";
    } catch (const GuardrailExceeded& e) {
      r.bounded_note = e.what();
      unknown = true;
    }
  }

  if (bounded_unsafe)
    r.verdict = Overall::BoundedUnsafe;
  else if (failed)
    r.verdict = Overall::VcFailed;
  else if (unknown)
    r.verdict = Overall::Inconclusive;
  else if (options.skip_bounded)
    r.verdict = Overall::CutoffOnly;
  else
    r.verdict = Overall::Safe;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

std::string caps_text(const std::map<std::string, int64_t>& caps) {
  std::string s;
  for (const auto& [sort, k] : caps) s += (s.empty() ? "" : ", ") + sort + ":" + std::to_string(k);
  return s;
}

}  // namespace

nlohmann::json report_json(const VerificationReport& r) {
  using nlohmann::json;
  json j;
  j["tool"] = kToolVersion;
  j["solver"] = {{"command", r.solver_command}, {"version", r.solver_version}, {"logic", "none declared"}};
  j["name"] = r.name;
  j["verdict"] = overall_name(r.verdict);
  j["cutoff"] = r.caps;
  j["stages"] = json::array();
  for (const auto& st : r.stages) {
    json s;
    s["label"] = st.label;
    s["sort"] = st.sort;
    s["k"] = st.k;
    s["injected"] = json::array();
    for (const auto& [sort, k] : st.injected) s["injected"].push_back({{"sort", sort}, {"k", k}});
    s["counts"] = {{"updates", st.counts.user_updates},
                   {"updatable", st.counts.updatable_symbols},
                   {"hints", st.counts.hints},
                   {"transitions", st.counts.transitions},
                   {"invariant", st.counts.invariant}};
    s["vcs"] = json::array();
    for (const auto& o : st.vcs) {
      json v{{"id", o.id}, {"verdict", verdict_name(o.result.verdict)}, {"seconds", o.result.seconds}};
      if (!o.result.reason.empty()) v["reason"] = o.result.reason;
      if (o.result.model) v["countermodel"] = render_model(*o.result.model);
      s["vcs"].push_back(v);
    }
    j["stages"].push_back(s);
  }
  if (r.bounded) {
    j["bounded"] = {{"safe", r.bounded->safe},
                    {"states", r.bounded->states},
                    {"instances", r.bounded->instances},
                    {"window_relative", r.bounded->window_relative}};
    if (r.bounded->trace) j["bounded"]["trace"] = render_trace(*r.bounded->trace);
  } else {
    j["bounded"] = nullptr;
  }
  if (!r.bounded_note.empty()) j["bounded_note"] = r.bounded_note;
  j["seconds"] = r.seconds;
  return j;
}

std::string report_text(const VerificationReport& r) {
  std::ostringstream os;
  char buf[32];
  for (const auto& st : r.stages) {
    os << "stage " << st.label << ": sort " << st.sort << ", k = " << st.k;
    if (!st.injected.empty()) {
      os << ", assuming";
      const char* sep = " ";
      for (const auto& [s, k] : st.injected) {
        os << sep << "|" << s << "| <= " << k;
        sep = ", ";
      }
    }
    os << "\n  updates " << st.counts.user_updates << "/" << st.counts.updatable_symbols << ", hints "
       << st.counts.hints << "/" << st.counts.transitions << ", invariant " << (st.counts.invariant ? "yes" : "no")
       << "\n";
    for (const auto& o : st.vcs) {
      std::snprintf(buf, sizeof buf, "%7.3fs", o.result.seconds);
      os << "  " << verdict_name(o.result.verdict) << std::string(9 - std::strlen(verdict_name(o.result.verdict)), ' ')
         << buf << "  " << o.id << "\n";
      if (!o.result.reason.empty()) os << "    " << o.result.reason << "\n";
      if (o.result.model) {
        std::istringstream lines(render_model(*o.result.model));
        for (std::string l; std::getline(lines, l);) os << "    " << l << "\n";
      }
    }
  }
  if (r.bounded) {
    os << "bounded check at " << caps_text(r.caps) << ": " << (r.bounded->safe ? "safe" : "UNSAFE") << " ("
       << r.bounded->states << " states, " << r.bounded->instances
       << (r.bounded->instances == 1 ? " instance)\n" : " instances)\n");
    if (r.bounded->trace) {
      std::istringstream lines(render_trace(*r.bounded->trace));
      for (std::string l; std::getline(lines, l);) os << "  " << l << "\n";
    }
  }
  if (!r.bounded_note.empty()) os << "note: " << r.bounded_note << "\n";
  std::snprintf(buf, sizeof buf, "%.2fs", r.seconds);
  os << "verdict: " << overall_name(r.verdict);
  if (r.verdict == Overall::Safe || r.verdict == Overall::CutoffOnly) {
    os << " (cutoff " << caps_text(r.caps);
    if (r.bounded && r.bounded->window_relative) os << "; bounded check window-relative";
    os << ")";
  }
  os << " in " << buf << "\n";
  return os.str();
}

std::map<std::string, std::string> emit_files(const Prepared& p) {
  std::map<std::string, std::string> out;
  for (const auto& st : p.plan.stages)
    for (const auto& vc : st.vcs) out[st.label + "__" + vc.id + ".smt2"] = emit_query(vc);
  nlohmann::json m;
  m["name"] = p.name;
  m["caps"] = p.plan.final_caps;
  m["transitions"] = nlohmann::json::array();
  for (const auto& t : p.original.transitions) m["transitions"].push_back(t.name);
  m["check"] = "reachability of a safety violation in every instance within caps";
  out["final__bounded-check.json"] = m.dump(2) + "\n";
  return out;
}

}  // namespace cutoff
