#pragma once

// Exhaustive finite-instance semantics: structure enumeration, bounded
// validity, bounded reachability and a direct check of the simulation
// conditions on a bounded universe.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cutoff/smtdrive.hpp"
#include "cutoff/structure.hpp"
#include "cutoff/vcgen.hpp"

namespace cutoff {

struct SizeBounds {
  std::map<std::string, int64_t> max;  // uninterpreted sorts
  int64_t int_window = 3;
  uint64_t ceiling = 10'000'000;  // candidate interpretations per search
};

// One size vector per combination, indexed like vocab.sorts(). Bounded sorts
// range over 1..bound, integers get 0, sorts outside `relevant` stay at 1.
std::vector<std::vector<int64_t>> size_combinations(const Vocabulary& vocab, const SizeBounds& bounds,
                                                    const std::set<std::string>* relevant = nullptr);

using SearchCallback = std::function<bool(const Structure&, std::span<const int64_t>)>;

// Backtracking search for the interpretations of the non-fixed slots and the
// parameters that satisfy every constraint. Conjuncts of the form
// forall x. S(x) <-> rhs or forall x. f(x) = t are used to compute S or f
// instead of enumerating it.
class Search {
 public:
  Search(SignaturePtr sig, std::vector<Variable> params, const std::vector<FormulaPtr>& constraints,
         const std::vector<int>& fixed = {});
  ~Search();
  Search(Search&&) noexcept;

  // `work` carries the sizes and the fixed tables. Returns false when the
  // callback stopped the search. Throws GuardrailExceeded past `ceiling`
  // candidates; `examined` accumulates across calls.
  bool run(Structure& work, const SearchCallback& cb, uint64_t ceiling, uint64_t& examined) const;
  bool window_relative() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Every structure over the plain copy within bounds that satisfies the
// constraint, in deterministic order. Returns the number yielded.
uint64_t enumerate_structures(const Vocabulary& vocab, const SizeBounds& bounds, const FormulaPtr& constraint,
                              const std::function<bool(const Structure&)>& cb);

struct ValidityResult {
  bool valid = true;
  std::optional<CounterModel> countermodel;
  bool window_relative = false;
  uint64_t examined = 0;
};

ValidityResult bounded_validity_check(const VerificationCondition& vc, const SizeBounds& bounds);

struct TraceStep {
  std::string transition;  // empty for the initial state
  std::vector<std::pair<Variable, int64_t>> args;
  Structure state;
};

struct Trace {
  std::vector<TraceStep> steps;
};

struct SafetyResult {
  bool safe = true;
  std::optional<Trace> trace;
  uint64_t states = 0;
  int instances = 0;
  bool window_relative = false;
};

// Reachability over every instance within bounds. The spec must not be
// Skolemized; definitions expanded.
SafetyResult bounded_safety_check(const ProtocolSpec& spec, const SizeBounds& bounds, uint64_t max_states = 5'000'000);

std::string render_trace(const Trace& trace);

struct SimulationItem {
  std::string name;
  bool holds = true;
  uint64_t checked = 0;
  std::string witness;
};

struct SimulationReport {
  std::vector<SimulationItem> strong;  // the five strong items
  std::vector<SimulationItem> weak;    // the plain simulation items
  uint64_t states = 0;
  uint64_t pairs = 0;

  bool strong_holds() const;
  bool weak_holds() const;
};

// Builds the relation by evaluating the update and deleting z's value, over
// every state of `ctx` within bounds. Defaults must be applied.
SimulationReport check_strong_simulation(const StageContext& ctx, const HighLowUpdate& update, int64_t k,
                                         const SizeBounds& bounds, uint64_t max_states = 5'000'000);

}  // namespace cutoff
