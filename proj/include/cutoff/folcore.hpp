#pragma once

// Many-sorted first-order syntax: sorts, vocabularies, tagged symbol copies,
// terms and formulas. Nodes are immutable and shared.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cutoff/error.hpp"

namespace cutoff {

inline constexpr const char* kIntSort = "int";
inline constexpr const char* kDeletionVar = "z";

enum class SortKind { Uninterpreted, Bounded, Integer };

struct Sort {
  std::string name;
  SortKind kind = SortKind::Uninterpreted;
  int64_t bound = 0;  // only for Bounded

  bool finite() const { return kind != SortKind::Integer; }
};

enum class SymbolKind { Relation, Function, Constant };

struct SymbolDecl {
  std::string name;
  SymbolKind kind = SymbolKind::Relation;
  std::vector<std::string> args;
  std::string result;  // empty for relations
  bool is_mutable = true;

  size_t arity() const { return args.size(); }
  bool is_relation() const { return kind == SymbolKind::Relation; }
};

class Vocabulary {
 public:
  void add_sort(Sort sort);
  void add_symbol(SymbolDecl decl);

  const Sort* find_sort(const std::string& name) const;
  const SymbolDecl* find_symbol(const std::string& name) const;
  const Sort& sort(const std::string& name) const;
  const SymbolDecl& symbol(const std::string& name) const;

  const std::vector<Sort>& sorts() const { return sorts_; }
  const std::vector<SymbolDecl>& symbols() const { return symbols_; }

  // Immutable 0-ary functions whose result is the given sort.
  std::vector<std::string> immutable_constants(const std::string& sort) const;

  bool has_integer_symbols() const;

 private:
  std::vector<Sort> sorts_;
  std::vector<SymbolDecl> symbols_;
  std::map<std::string, size_t> sort_index_;
  std::map<std::string, size_t> symbol_index_;
};

// Vocabulary copy a symbol occurrence refers to. Primed is the post-state of
// the plain vocabulary; the others are the high/low copies and their primes.
enum class Tag : uint8_t { Plain, Primed, High, Low, HighPrimed, LowPrimed };

const char* tag_name(Tag tag);
// Immutable symbols have one time-copy, so primes collapse onto the base copy.
Tag collapse_tag(Tag tag, bool rigid);
Tag prime_of(Tag tag);

struct Variable {
  std::string name;
  std::string sort;

  auto operator<=>(const Variable&) const = default;
};

struct Term;
struct Formula;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Term {
  enum class Kind { Var, App, Int, Add, Sub, Ite };

  Kind kind = Kind::Var;
  std::string sort;
  Variable var;                 // Var
  std::string symbol;           // App
  Tag tag = Tag::Plain;         // App
  bool rigid = false;           // App: symbol is immutable
  std::vector<TermPtr> args;    // App arguments; Add/Sub operands; Ite branches
  int64_t value = 0;            // Int
  FormulaPtr cond;              // Ite
};

struct Formula {
  enum class Kind { True, False, Eq, Pred, Less, LessEq, Not, And, Or, Implies, Iff, Forall, Exists };

  Kind kind = Kind::True;
  std::vector<TermPtr> terms;      // Eq/Less/LessEq operands, Pred arguments
  std::string symbol;              // Pred
  Tag tag = Tag::Plain;            // Pred
  bool rigid = false;              // Pred
  std::vector<FormulaPtr> subs;    // connectives and quantifier body
  Variable bound;                  // Forall/Exists

  bool is_quantifier() const { return kind == Kind::Forall || kind == Kind::Exists; }
};

// ---- construction ----

TermPtr mk_var(const Variable& v);
TermPtr mk_app(const SymbolDecl& decl, std::vector<TermPtr> args, Tag tag = Tag::Plain);
TermPtr mk_app_raw(std::string symbol, std::string sort, std::vector<TermPtr> args, Tag tag, bool rigid);
TermPtr mk_int(int64_t value);
TermPtr mk_add(TermPtr a, TermPtr b);
TermPtr mk_sub(TermPtr a, TermPtr b);
TermPtr mk_ite(FormulaPtr cond, TermPtr then_term, TermPtr else_term);

FormulaPtr mk_true();
FormulaPtr mk_false();
FormulaPtr mk_bool(bool value);
FormulaPtr mk_eq(TermPtr a, TermPtr b);
FormulaPtr mk_neq(TermPtr a, TermPtr b);
FormulaPtr mk_pred(const SymbolDecl& decl, std::vector<TermPtr> args, Tag tag = Tag::Plain);
FormulaPtr mk_pred_raw(std::string symbol, std::vector<TermPtr> args, Tag tag, bool rigid);
FormulaPtr mk_less(TermPtr a, TermPtr b);
FormulaPtr mk_less_eq(TermPtr a, TermPtr b);
FormulaPtr mk_not(FormulaPtr f);
// Negation that removes a double negation instead of stacking one.
FormulaPtr negate(const FormulaPtr& f);
FormulaPtr mk_and(std::vector<FormulaPtr> fs);
FormulaPtr mk_and(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_or(std::vector<FormulaPtr> fs);
FormulaPtr mk_or(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_implies(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_iff(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_forall(const Variable& v, FormulaPtr body);
FormulaPtr mk_exists(const Variable& v, FormulaPtr body);
FormulaPtr mk_forall(const std::vector<Variable>& vs, FormulaPtr body);
FormulaPtr mk_exists(const std::vector<Variable>& vs, FormulaPtr body);

// Conjunction members with nested Ands flattened and True dropped.
std::vector<FormulaPtr> conjuncts(const FormulaPtr& f);

// ---- inspection ----

std::set<Variable> free_variables(const FormulaPtr& f);
std::set<Variable> free_variables(const TermPtr& t);
// Every variable occurring free or bound.
std::set<Variable> all_variables(const FormulaPtr& f);
bool mentions_variable_name(const FormulaPtr& f, const std::string& name);

struct SymbolRef {
  std::string name;
  Tag tag = Tag::Plain;

  auto operator<=>(const SymbolRef&) const = default;
};
std::set<SymbolRef> symbols_of(const FormulaPtr& f);
std::set<SymbolRef> symbols_of(const TermPtr& t);
std::set<Tag> tags_of(const FormulaPtr& f);

bool equal(const FormulaPtr& a, const FormulaPtr& b);
bool equal(const TermPtr& a, const TermPtr& b);

// Throws IllFormed unless every application matches its declaration.
void check_well_sorted(const FormulaPtr& f, const Vocabulary& vocab);

// ---- transformation ----

using TagMap = std::map<Tag, Tag>;
// Relabel every symbol occurrence. An occurrence whose tag (after rigid
// collapse) is not in the map is a mixed-tag input and raises IllFormed.
FormulaPtr retag(const FormulaPtr& f, const TagMap& map);
TermPtr retag(const TermPtr& t, const TagMap& map);
FormulaPtr retag(const FormulaPtr& f, Tag from, Tag to);

using Binding = std::map<Variable, TermPtr>;
// Capture-avoiding simultaneous substitution of free variables.
FormulaPtr substitute(const FormulaPtr& f, const Binding& binding);
TermPtr substitute(const TermPtr& t, const Binding& binding);

// A fresh variable name based on `base` avoiding every name in `taken`.
std::string fresh_name(const std::string& base, const std::set<std::string>& taken);

// ---- printing ----

std::string to_string(const TermPtr& t);
std::string to_string(const FormulaPtr& f);

}  // namespace cutoff
