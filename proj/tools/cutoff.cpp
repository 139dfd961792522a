// Command-line front end: verify, emit and oracle subcommands.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cutoff/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cutoff;

namespace {

constexpr int kUsage = 2;
constexpr int kInfra = 3;

std::map<std::string, int64_t> parse_caps(const std::vector<std::string>& items) {
  std::map<std::string, int64_t> out;
  for (const auto& it : items) {
    auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--max", "expected <sort>=<n>, got '" + it + "'");
    try {
      size_t used = 0;
      int64_t n = std::stoll(it.substr(eq + 1), &used);
      if (used != it.size() - eq - 1 || n < 1) throw std::invalid_argument(it);
      out[it.substr(0, eq)] = n;
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--max", "expected a positive size in '" + it + "'");
    }
  }
  return out;
}

int cmd_verify(const std::string& file, const std::optional<std::string>& solver, int timeout_ms, int jobs,
               const std::string& emit_dir, bool skip_bounded, const std::vector<std::string>& max,
               const std::string& report, int64_t window) {
  Prepared p = prepare_file(file);
  if (!emit_dir.empty()) {
    fs::create_directories(emit_dir);
    for (const auto& [name, text] : emit_files(p)) std::ofstream(fs::path(emit_dir) / name) << text;
  }
  VerifyOptions o;
  o.solver = solver_from(solver, timeout_ms);
  o.jobs = jobs;
  o.skip_bounded = skip_bounded;
  o.extra_caps = parse_caps(max);
  o.int_window = window;
  VerificationReport r = verify(p, o);
  std::cout << report_text(r);
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw InfrastructureError("cannot write report '" + report + "'");
    out << report_json(r).dump(2) << "\n";
  }
  return exit_code(r.verdict);
}

int cmd_emit(const std::string& file, const std::string& dir) {
  Prepared p = prepare_file(file);
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (const auto& [name, text] : emit_files(p)) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out || !(out << text)) throw InfrastructureError("cannot write into '" + dir + "'");
    std::cout << (fs::path(dir) / name).string() << "\n";
  }
  return 0;
}

int cmd_oracle(const std::string& file, bool safety, bool simulation, bool validity,
               const std::vector<std::string>& max, int64_t window) {
  Prepared p = prepare_file(file);
  if (!safety && !simulation && !validity) safety = true;
  SizeBounds b;
  b.max = p.plan.final_caps;
  for (const auto& [s, n] : parse_caps(max)) b.max[s] = n;
  b.int_window = window;
  bool ok = true;
  if (safety) {
    SafetyResult r = bounded_safety_check(p.original, b);
    std::cout << "safety: " << (r.safe ? "SAFE" : "UNSAFE") << " (" << r.states << " states, " << r.instances
              << (r.instances == 1 ? " instance" : " instances") << (r.window_relative ? ", window-relative" : "") << ")\n";
    if (r.trace) std::cout << render_trace(*r.trace);
    ok &= r.safe;
  }
  if (simulation) {
    for (const auto& st : p.plan.stages) {
      SimulationReport r = check_strong_simulation(st.context, st.update, st.k, b);
      std::cout << "simulation " << st.label << ": " << r.states << " states, " << r.pairs << " pairs\n";
      for (const auto& group : {std::make_pair("strong", &r.strong), std::make_pair("weak", &r.weak)}) {
        for (const auto& item : *group.second) {
          std::cout << "  " << group.first << " " << item.name << ": " << (item.holds ? "holds" : "VIOLATED") << " ("
                    << item.checked << " checks)\n";
          if (!item.holds) std::cout << item.witness;
        }
      }
      ok &= r.strong_holds();
    }
  }
  if (validity) {
    for (const auto& st : p.plan.stages) {
      for (const auto& vc : st.vcs) {
        ValidityResult r = bounded_validity_check(vc, b);
        std::cout << (r.valid ? "valid-up-to" : "invalid    ") << "  " << st.label << "__" << vc.id << "\n";
        if (r.countermodel) std::cout << render_model(*r.countermodel);
        ok &= r.valid;
      }
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cutoff verification for parameterized protocol specifications"};
  app.require_subcommand(1);
  std::string file, emit_dir, report, dir;
  std::optional<std::string> solver;
  int timeout_ms = 10000, jobs = 0;
  bool skip_bounded = false, safety = false, simulation = false, validity = false;
  std::vector<std::string> max;
  int64_t window = 3;

  auto* verify = app.add_subcommand("verify", "Discharge every obligation and run the bounded check");
  verify->add_option("file", file, "Specification file")->required();
  verify->add_option("--solver", solver, "Solver command (default: $CUTOFF_SOLVER or z3)");
  verify->add_option("--timeout-ms", timeout_ms, "Per-query timeout")->check(CLI::PositiveNumber);
  verify->add_option("--jobs", jobs, "Parallel solver processes (0: auto)")->check(CLI::NonNegativeNumber);
  verify->add_option("--emit-dir", emit_dir, "Also write the queries here");
  verify->add_flag("--skip-bounded", skip_bounded, "Stop after the obligations (CUTOFF-ONLY)");
  verify->add_option("--max", max, "Raise a bounded-check cap, <sort>=<n>");
  verify->add_option("--report", report, "Write a JSON report");
  verify->add_option("--int-window", window, "Integer window of the bounded check")->check(CLI::Range(0, 100));

  auto* emit = app.add_subcommand("emit", "Write one SMT-LIB file per obligation");
  emit->add_option("file", file, "Specification file")->required();
  emit->add_option("--emit-dir", dir, "Output directory")->required();

  auto* oracle = app.add_subcommand("oracle", "Exhaustive checks on bounded instances");
  oracle->add_option("file", file, "Specification file")->required();
  oracle->add_flag("--safety", safety, "Bounded reachability of a safety violation");
  oracle->add_flag("--simulation", simulation, "Check the simulation conditions directly");
  oracle->add_flag("--validity", validity, "Brute-force every obligation");
  oracle->add_option("--max", max, "Size bound, <sort>=<n>");
  oracle->add_option("--int-window", window, "Integer window")->check(CLI::Range(0, 100));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*verify) return cmd_verify(file, solver, timeout_ms, jobs, emit_dir, skip_bounded, max, report, window);
    if (*emit) return cmd_emit(file, dir);
    return cmd_oracle(file, safety, simulation, validity, max, window);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Diagnostic& e) {
    std::cerr << file << ":" << (e.line() > 0 ? "" : " ") << e.what() << "\n";
    return kUsage;
  } catch (const IllFormed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const GuardrailExceeded& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kInfra;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfra;
  }
}
