#pragma once

// End-to-end orchestration: parse, plan, discharge obligations, bounded check.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutoff/oracle.hpp"
#include "cutoff/smtdrive.hpp"
#include "cutoff/speclang.hpp"
#include "cutoff/vcgen.hpp"

namespace cutoff {

inline constexpr const char* kToolVersion = "cutoff 1.0.0";

struct Prepared {
  std::string name;        // file stem
  ParsedSpec parsed;       // as written
  ProtocolSpec original;   // definitions expanded, safety untouched
  ProtocolSpec spec;       // expanded and Skolemized
  ProofPlan plan;
};

// Throws Diagnostic for malformed input.
Prepared prepare_text(const std::string& text, const std::string& name = "spec");
Prepared prepare_file(const std::string& path);

enum class Overall { Safe, VcFailed, Inconclusive, BoundedUnsafe, CutoffOnly };
const char* overall_name(Overall v);
int exit_code(Overall v);

struct VerifyOptions {
  SolverConfig solver;
  int jobs = 0;  // 0: one per hardware thread
  bool skip_bounded = false;
  std::map<std::string, int64_t> extra_caps;  // raise bounded-check caps
  int64_t int_window = 3;
};

struct VcOutcome {
  std::string id;
  VcKind kind = VcKind::IotaPreservation;
  SolverResult result;
};

struct StageReport {
  std::string label;
  std::string sort;
  int64_t k = 0;
  std::vector<std::pair<std::string, int64_t>> injected;
  UpdateCounts counts;
  std::vector<VcOutcome> vcs;
};

struct VerificationReport {
  std::string name;
  std::vector<StageReport> stages;
  std::map<std::string, int64_t> caps;
  std::optional<SafetyResult> bounded;
  std::string bounded_note;
  Overall verdict = Overall::Inconclusive;
  std::string solver_command;
  std::string solver_version;
  double seconds = 0;
};

// Throws InfrastructureError when the solver cannot be run or misbehaves.
VerificationReport verify(const Prepared& p, const VerifyOptions& options);

nlohmann::json report_json(const VerificationReport& r);
std::string report_text(const VerificationReport& r);

// Query text per obligation keyed by file name, plus the bounded-check
// manifest; deterministic.
std::map<std::string, std::string> emit_files(const Prepared& p);

}  // namespace cutoff
