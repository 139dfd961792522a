#pragma once

// Protocol specification files: parsing, definition expansion, Skolemization
// of the negated safety property and high-low update defaults.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cutoff/folcore.hpp"

namespace cutoff {

struct Definition {
  std::string name;
  std::vector<Variable> params;
  FormulaPtr body;
};

struct TransitionDef {
  std::string name;
  std::vector<Variable> params;
  std::vector<FormulaPtr> assumes;  // over unprimed symbols
  std::vector<FormulaPtr> clauses;  // two-state formulas

  // Conjunction of assumes and clauses; parameters stay free.
  FormulaPtr body() const;
};

struct ProtocolSpec {
  Vocabulary vocab;
  std::vector<FormulaPtr> axioms;
  std::vector<FormulaPtr> inits;
  std::vector<Definition> definitions;
  std::vector<TransitionDef> transitions;
  FormulaPtr safety = mk_true();
  FormulaPtr unskolemized_safety;  // set by skolemize_safety when it changes safety
  std::vector<std::string> skolem_constants;

  FormulaPtr gamma() const { return mk_and(axioms); }
  FormulaPtr iota() const { return mk_and(inits); }
  const TransitionDef* find_transition(const std::string& name) const;
};

struct RelationUpdate {
  std::vector<Variable> params;  // argument variables; z is implicit
  FormulaPtr formula;            // over the high copy
  bool user = false;
};

struct FunctionUpdate {
  std::vector<Variable> params;
  TermPtr term;  // over the high copy
  bool user = false;
};

struct Hint {
  std::string transition;  // high transition
  std::string target;      // simulating low transition
  std::vector<Variable> high;
  std::vector<Variable> low;
  FormulaPtr formula;  // over the high copy, free in high, low and z
};

// Fresh immutable constants and axioms over immutable symbols available from
// one stage onward.
struct StageExtension {
  std::vector<SymbolDecl> constants;
  std::vector<FormulaPtr> axioms;
};

struct HighLowUpdate {
  std::string sort;
  std::optional<int64_t> bound;
  FormulaPtr condition;  // null until defaults apply; free only in z
  std::map<std::string, RelationUpdate> relations;
  std::map<std::string, FunctionUpdate> functions;  // includes constants
  std::map<std::string, Hint> hints;                // keyed by high transition
  FormulaPtr invariant;                             // closed, optional
  StageExtension extension;
  bool condition_user = false;
  bool bound_user = false;

  Variable z() const { return Variable{kDeletionVar, sort}; }
  // θ with the invariant conjoined.
  FormulaPtr theta() const;
};

struct CutoffTask {
  std::vector<HighLowUpdate> stages;
};

struct ParsedSpec {
  ProtocolSpec spec;
  CutoffTask task;
};

// Throws Diagnostic carrying the line and column of the offending token.
ParsedSpec parse_spec(const std::string& text);
ParsedSpec parse_spec_file(const std::string& path);

// Inline every definition application. Throws Diagnostic on cycles.
ProtocolSpec expand_definitions(const ProtocolSpec& spec);
// Stage formulas may also use definitions.
HighLowUpdate expand_definitions(const HighLowUpdate& update, const ProtocolSpec& spec);

// Negation normal form (connectives ->, <-> eliminated).
FormulaPtr nnf(const FormulaPtr& f);

// Replace the leading existentials of NNF(!safety) by fresh immutable
// constants. Throws Diagnostic when an existential sits under a universal.
ProtocolSpec skolemize_safety(const ProtocolSpec& spec);

// Fill in the condition, bound and trivial updates; conjoin nothing twice.
// `vocab` is the vocabulary in force for the stage (including extensions).
HighLowUpdate apply_defaults(const HighLowUpdate& update, const Vocabulary& vocab);

// Vocabulary with the stage extension's constants added.
Vocabulary extend_vocabulary(const Vocabulary& vocab, const StageExtension& ext);

// Updates counted the way summary tables do: user-given updates over the
// relations, functions and mutable constants.
struct UpdateCounts {
  int user_updates = 0;
  int updatable_symbols = 0;
  int hints = 0;
  int transitions = 0;
  bool invariant = false;
};
UpdateCounts count_updates(const HighLowUpdate& update, const ProtocolSpec& spec);

// Spec-file text that parses back to the same resolved representation.
std::string print_spec(const ProtocolSpec& spec, const CutoffTask& task);

}  // namespace cutoff
