#pragma once

// SMT-LIB emission, external solver processes and countermodel decoding.

#include <optional>
#include <string>
#include <vector>

#include "cutoff/structure.hpp"
#include "cutoff/vcgen.hpp"

namespace cutoff {

inline constexpr const char* kSolverEnv = "CUTOFF_SOLVER";

struct SolverConfig {
  std::vector<std::string> command{"z3", "-in"};
  int timeout_ms = 10000;
};

// --solver flag, then $CUTOFF_SOLVER, then z3. The value is split on spaces;
// "-in" is appended when the executable is z3 and no arguments were given.
SolverConfig solver_from(const std::optional<std::string>& flag, int timeout_ms = 10000);

std::string mangle(const std::string& symbol, Tag tag, bool rigid);
std::string mangle_param(const std::string& name);

// Deterministic query text: declarations, one assertion per hypothesis, the
// negated conclusion and check-sat.
std::string emit_query(const VerificationCondition& vc);

struct CounterModel {
  Structure structure;
  Assignment params;
  // False when integer quantifiers made the re-check window-relative.
  bool verified = true;
};

enum class Verdict { Valid, Invalid, Unknown, Timeout };
const char* verdict_name(Verdict v);

struct SolverResult {
  Verdict verdict = Verdict::Unknown;
  std::string reason;  // for unknown
  double seconds = 0;
  std::optional<CounterModel> model;
};

// Runs one solver process. Throws InfrastructureError on crash or garbage,
// DecodeIntegrityError when a countermodel fails re-validation.
SolverResult check(const VerificationCondition& vc, const SolverConfig& config);

// Build and re-validate a structure from the text of a get-model response.
CounterModel decode_model(const std::string& model_text, const VerificationCondition& vc);

// High and low, pre and post views of a countermodel.
std::string render_model(const CounterModel& model);

// Version string reported by the solver, or empty if it cannot be queried.
std::string solver_version(const SolverConfig& config);

}  // namespace cutoff
