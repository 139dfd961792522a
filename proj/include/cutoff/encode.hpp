#pragma once

// Formula transformations behind the high-low update encoding.

#include <map>
#include <string>

#include "cutoff/folcore.hpp"
#include "cutoff/speclang.hpp"

namespace cutoff {

// Guard every quantifier over z's sort with x != z. Requires that no
// variable named like z occurs in the formula.
FormulaPtr z_exclude(const FormulaPtr& f, const Variable& z);

struct EtaFormula {
  FormulaPtr formula;  // the assembled high-low update, free only in z
  FormulaPtr theta;
  std::map<std::string, FormulaPtr> relation_parts;  // forall x. r@l(x) <-> alpha_r
  std::map<std::string, FormulaPtr> function_parts;  // forall x. f@l(x) = t_f
};

// Requires defaults applied. Low copies on the left, high copies on the right.
EtaFormula build_eta(const HighLowUpdate& update, const Vocabulary& vocab);

// Stutter over the plain and primed copies of the mutable symbols.
FormulaPtr idle_formula(const Vocabulary& vocab);

// Functions and constants into z's sort never hit z on non-z arguments.
FormulaPtr closure_formula(const Vocabulary& vocab, const Variable& z);

FormulaPtr size_gt(const std::string& sort, int64_t k);
FormulaPtr size_le(const std::string& sort, int64_t k);

}  // namespace cutoff
