#pragma once

// Verification conditions for a strong size-reducing simulation, their
// per-transition splitting and hint decomposition, and multi-sort planning.

#include <map>
#include <string>
#include <vector>

#include "cutoff/folcore.hpp"
#include "cutoff/speclang.hpp"

namespace cutoff {

enum class VcKind {
  IotaPreservation,
  TauPreservation,
  SafetyPreservation,
  Projectability,
  GammaPreservation,
  ThetaInitiation,
  ThetaConsecution,
  ExtensionSoundness,
};

enum class VcPart { Whole, StutterIncluded, HintTotality, HintSufficiency };

const char* vc_kind_name(VcKind kind);
const char* vc_part_name(VcPart part);

// Valid iff for all params: hypotheses imply conclusion.
struct VerificationCondition {
  std::string id;
  VcKind kind = VcKind::IotaPreservation;
  std::string transition;  // split obligations only
  VcPart part = VcPart::Whole;
  std::vector<Variable> params;
  std::vector<FormulaPtr> hypotheses;
  FormulaPtr conclusion;
  Vocabulary vocab;

  FormulaPtr hypothesis() const { return mk_and(hypotheses); }
  // The closed implication.
  FormulaPtr formula() const;
};

// Everything the obligations of one stage are built from.
struct StageContext {
  Vocabulary vocab;                  // spec vocabulary plus extensions so far
  std::vector<FormulaPtr> gamma;     // plain copy
  FormulaPtr iota;
  FormulaPtr safety;                 // Skolemized
  // The low state must violate the property itself, so fault preservation
  // concludes the unskolemized negation; null when nothing was Skolemized.
  FormulaPtr low_safety;
  std::vector<TransitionDef> transitions;
};

// The seven unsplit obligations, in row order.
std::vector<VerificationCondition> generate_vcs(const StageContext& ctx, const HighLowUpdate& update, int64_t k);

// Replace tau-preservation and theta-consecution by one obligation per
// transition; other obligations pass through.
std::vector<VerificationCondition> split_per_transition(const std::vector<VerificationCondition>& vcs,
                                                        const StageContext& ctx, const HighLowUpdate& update);

// Decompose a split tau-preservation obligation with a hint. Returns the
// sufficiency obligation, preceded by totality unless the hint is a
// functional assignment of the low arguments.
std::vector<VerificationCondition> apply_hint(const VerificationCondition& split, const Hint& hint,
                                              const StageContext& ctx, const HighLowUpdate& update);

// Gamma entails that the stage's fresh constants can be chosen.
VerificationCondition extension_soundness(const StageContext& before, const StageExtension& ext);

struct PlanStage {
  std::string sort;
  int64_t k = 0;
  std::string label;  // "1-node"
  HighLowUpdate update;  // defaults applied
  StageContext context;
  std::vector<std::pair<std::string, int64_t>> injected;  // caps of earlier stages
  std::vector<VerificationCondition> vcs;
};

struct ProofPlan {
  std::vector<PlanStage> stages;
  std::map<std::string, int64_t> final_caps;  // every finite sort
};

// `spec` Skolemized with definitions expanded; stage updates expanded.
ProofPlan plan_multisort(const ProtocolSpec& spec, const CutoffTask& task);

// Hint formula assigns every low argument a term over the others.
bool hint_is_functional(const Hint& hint);

}  // namespace cutoff
