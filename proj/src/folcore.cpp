#include "cutoff/folcore.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cutoff {

// ---------------------------------------------------------------------------
// Vocabulary

void Vocabulary::add_sort(Sort sort) {
  if (sort_index_.count(sort.name)) throw IllFormed("duplicate sort '" + sort.name + "'");
  if (sort.kind == SortKind::Bounded && sort.bound < 1)
    throw IllFormed("bounded sort '" + sort.name + "' needs a bound of at least 1");
  sort_index_[sort.name] = sorts_.size();
  sorts_.push_back(std::move(sort));
}

void Vocabulary::add_symbol(SymbolDecl decl) {
  if (symbol_index_.count(decl.name)) throw IllFormed("duplicate symbol '" + decl.name + "'");
  for (const auto& s : decl.args)
    if (!find_sort(s)) throw IllFormed("symbol '" + decl.name + "' uses unknown sort '" + s + "'");
  if (decl.kind == SymbolKind::Relation) {
    if (!decl.result.empty()) throw IllFormed("relation '" + decl.name + "' cannot have a result sort");
  } else {
    if (!find_sort(decl.result))
      throw IllFormed("symbol '" + decl.name + "' has unknown result sort '" + decl.result + "'");
    if (decl.kind == SymbolKind::Constant && !decl.args.empty())
      throw IllFormed("constant '" + decl.name + "' cannot take arguments");
  }
  symbol_index_[decl.name] = symbols_.size();
  symbols_.push_back(std::move(decl));
}

const Sort* Vocabulary::find_sort(const std::string& name) const {
  auto it = sort_index_.find(name);
  return it == sort_index_.end() ? nullptr : &sorts_[it->second];
}

const SymbolDecl* Vocabulary::find_symbol(const std::string& name) const {
  auto it = symbol_index_.find(name);
  return it == symbol_index_.end() ? nullptr : &symbols_[it->second];
}

const Sort& Vocabulary::sort(const std::string& name) const {
  if (auto* s = find_sort(name)) return *s;
  throw IllFormed("unknown sort '" + name + "'");
}

const SymbolDecl& Vocabulary::symbol(const std::string& name) const {
  if (auto* s = find_symbol(name)) return *s;
  throw IllFormed("unknown symbol '" + name + "'");
}

std::vector<std::string> Vocabulary::immutable_constants(const std::string& sort) const {
  std::vector<std::string> out;
  for (const auto& d : symbols_)
    if (!d.is_relation() && d.args.empty() && !d.is_mutable && d.result == sort) out.push_back(d.name);
  return out;
}

bool Vocabulary::has_integer_symbols() const {
  for (const auto& s : sorts_)
    if (s.kind == SortKind::Integer) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Tags

const char* tag_name(Tag tag) {
  switch (tag) {
    case Tag::Plain: return "plain";
    case Tag::Primed: return "primed";
    case Tag::High: return "h";
    case Tag::Low: return "l";
    case Tag::HighPrimed: return "h'";
    case Tag::LowPrimed: return "l'";
  }
  return "?";
}

Tag collapse_tag(Tag tag, bool rigid) {
  if (!rigid) return tag;
  switch (tag) {
    case Tag::Primed: return Tag::Plain;
    case Tag::HighPrimed: return Tag::High;
    case Tag::LowPrimed: return Tag::Low;
    default: return tag;
  }
}

Tag prime_of(Tag tag) {
  switch (tag) {
    case Tag::Plain: return Tag::Primed;
    case Tag::High: return Tag::HighPrimed;
    case Tag::Low: return Tag::LowPrimed;
    default: throw IllFormed(std::string("tag ") + tag_name(tag) + " has no primed copy");
  }
}

// ---------------------------------------------------------------------------
// Construction

namespace {

std::shared_ptr<Term> new_term(Term::Kind k, std::string sort) {
  auto t = std::make_shared<Term>();
  t->kind = k;
  t->sort = std::move(sort);
  return t;
}

std::shared_ptr<Formula> new_formula(Formula::Kind k) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  return f;
}

void require_int(const TermPtr& t, const char* what) {
  if (t->sort != kIntSort) throw IllFormed(std::string(what) + " expects an integer operand, got sort '" + t->sort + "'");
}

}  // namespace

TermPtr mk_var(const Variable& v) {
  auto t = new_term(Term::Kind::Var, v.sort);
  t->var = v;
  return t;
}

TermPtr mk_app(const SymbolDecl& decl, std::vector<TermPtr> args, Tag tag) {
  if (decl.is_relation()) throw IllFormed("relation '" + decl.name + "' used as a term");
  if (args.size() != decl.arity())
    throw IllFormed("'" + decl.name + "' expects " + std::to_string(decl.arity()) + " arguments, got " +
                    std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i]->sort != decl.args[i])
      throw IllFormed("argument " + std::to_string(i + 1) + " of '" + decl.name + "' has sort '" + args[i]->sort +
                      "', expected '" + decl.args[i] + "'");
  return mk_app_raw(decl.name, decl.result, std::move(args), collapse_tag(tag, !decl.is_mutable), !decl.is_mutable);
}

TermPtr mk_app_raw(std::string symbol, std::string sort, std::vector<TermPtr> args, Tag tag, bool rigid) {
  auto t = new_term(Term::Kind::App, std::move(sort));
  t->symbol = std::move(symbol);
  t->tag = collapse_tag(tag, rigid);
  t->rigid = rigid;
  t->args = std::move(args);
  return t;
}

TermPtr mk_int(int64_t value) {
  auto t = new_term(Term::Kind::Int, kIntSort);
  t->value = value;
  return t;
}

TermPtr mk_add(TermPtr a, TermPtr b) {
  require_int(a, "+");
  require_int(b, "+");
  auto t = new_term(Term::Kind::Add, kIntSort);
  t->args = {std::move(a), std::move(b)};
  return t;
}

TermPtr mk_sub(TermPtr a, TermPtr b) {
  require_int(a, "-");
  require_int(b, "-");
  auto t = new_term(Term::Kind::Sub, kIntSort);
  t->args = {std::move(a), std::move(b)};
  return t;
}

TermPtr mk_ite(FormulaPtr cond, TermPtr then_term, TermPtr else_term) {
  if (then_term->sort != else_term->sort)
    throw IllFormed("if-then-else branches have sorts '" + then_term->sort + "' and '" + else_term->sort + "'");
  auto t = new_term(Term::Kind::Ite, then_term->sort);
  t->cond = std::move(cond);
  t->args = {std::move(then_term), std::move(else_term)};
  return t;
}

FormulaPtr mk_true() {
  static const FormulaPtr t = new_formula(Formula::Kind::True);
  return t;
}

FormulaPtr mk_false() {
  static const FormulaPtr f = new_formula(Formula::Kind::False);
  return f;
}

FormulaPtr mk_bool(bool value) { return value ? mk_true() : mk_false(); }

FormulaPtr mk_eq(TermPtr a, TermPtr b) {
  if (a->sort != b->sort)
    throw IllFormed("equality between sorts '" + a->sort + "' and '" + b->sort + "'");
  auto f = new_formula(Formula::Kind::Eq);
  f->terms = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr mk_neq(TermPtr a, TermPtr b) { return mk_not(mk_eq(std::move(a), std::move(b))); }

FormulaPtr mk_pred(const SymbolDecl& decl, std::vector<TermPtr> args, Tag tag) {
  if (!decl.is_relation()) throw IllFormed("'" + decl.name + "' is not a relation");
  if (args.size() != decl.arity())
    throw IllFormed("'" + decl.name + "' expects " + std::to_string(decl.arity()) + " arguments, got " +
                    std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i]->sort != decl.args[i])
      throw IllFormed("argument " + std::to_string(i + 1) + " of '" + decl.name + "' has sort '" + args[i]->sort +
                      "', expected '" + decl.args[i] + "'");
  return mk_pred_raw(decl.name, std::move(args), tag, !decl.is_mutable);
}

FormulaPtr mk_pred_raw(std::string symbol, std::vector<TermPtr> args, Tag tag, bool rigid) {
  auto f = new_formula(Formula::Kind::Pred);
  f->symbol = std::move(symbol);
  f->terms = std::move(args);
  f->tag = collapse_tag(tag, rigid);
  f->rigid = rigid;
  return f;
}

FormulaPtr mk_less(TermPtr a, TermPtr b) {
  require_int(a, "<");
  require_int(b, "<");
  auto f = new_formula(Formula::Kind::Less);
  f->terms = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr mk_less_eq(TermPtr a, TermPtr b) {
  require_int(a, "<=");
  require_int(b, "<=");
  auto f = new_formula(Formula::Kind::LessEq);
  f->terms = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr mk_not(FormulaPtr g) {
  auto f = new_formula(Formula::Kind::Not);
  f->subs = {std::move(g)};
  return f;
}

FormulaPtr negate(const FormulaPtr& f) {
  if (f->kind == Formula::Kind::Not) return f->subs[0];
  if (f->kind == Formula::Kind::True) return mk_false();
  if (f->kind == Formula::Kind::False) return mk_true();
  return mk_not(f);
}

FormulaPtr mk_and(std::vector<FormulaPtr> fs) {
  if (fs.empty()) return mk_true();
  if (fs.size() == 1) return fs[0];
  auto f = new_formula(Formula::Kind::And);
  f->subs = std::move(fs);
  return f;
}

FormulaPtr mk_and(FormulaPtr a, FormulaPtr b) { return mk_and(std::vector<FormulaPtr>{std::move(a), std::move(b)}); }

FormulaPtr mk_or(std::vector<FormulaPtr> fs) {
  if (fs.empty()) return mk_false();
  if (fs.size() == 1) return fs[0];
  auto f = new_formula(Formula::Kind::Or);
  f->subs = std::move(fs);
  return f;
}

FormulaPtr mk_or(FormulaPtr a, FormulaPtr b) { return mk_or(std::vector<FormulaPtr>{std::move(a), std::move(b)}); }

FormulaPtr mk_implies(FormulaPtr a, FormulaPtr b) {
  auto f = new_formula(Formula::Kind::Implies);
  f->subs = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr mk_iff(FormulaPtr a, FormulaPtr b) {
  auto f = new_formula(Formula::Kind::Iff);
  f->subs = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr mk_forall(const Variable& v, FormulaPtr body) {
  auto f = new_formula(Formula::Kind::Forall);
  f->bound = v;
  f->subs = {std::move(body)};
  return f;
}

FormulaPtr mk_exists(const Variable& v, FormulaPtr body) {
  auto f = new_formula(Formula::Kind::Exists);
  f->bound = v;
  f->subs = {std::move(body)};
  return f;
}

FormulaPtr mk_forall(const std::vector<Variable>& vs, FormulaPtr body) {
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) body = mk_forall(*it, std::move(body));
  return body;
}

FormulaPtr mk_exists(const std::vector<Variable>& vs, FormulaPtr body) {
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) body = mk_exists(*it, std::move(body));
  return body;
}

std::vector<FormulaPtr> conjuncts(const FormulaPtr& f) {
  std::vector<FormulaPtr> out;
  std::function<void(const FormulaPtr&)> walk = [&](const FormulaPtr& g) {
    if (g->kind == Formula::Kind::And) {
      for (const auto& s : g->subs) walk(s);
    } else if (g->kind != Formula::Kind::True) {
      out.push_back(g);
    }
  };
  walk(f);
  return out;
}

// ---------------------------------------------------------------------------
// Inspection

namespace {

void collect_free(const TermPtr& t, std::set<Variable>& bound, std::set<Variable>& out);

void collect_free(const FormulaPtr& f, std::set<Variable>& bound, std::set<Variable>& out) {
  for (const auto& t : f->terms) collect_free(t, bound, out);
  if (f->is_quantifier()) {
    bool fresh = bound.insert(f->bound).second;
    collect_free(f->subs[0], bound, out);
    if (fresh) bound.erase(f->bound);
    return;
  }
  for (const auto& s : f->subs) collect_free(s, bound, out);
}

void collect_free(const TermPtr& t, std::set<Variable>& bound, std::set<Variable>& out) {
  if (t->kind == Term::Kind::Var) {
    if (!bound.count(t->var)) out.insert(t->var);
    return;
  }
  for (const auto& a : t->args) collect_free(a, bound, out);
  if (t->cond) collect_free(t->cond, bound, out);
}

void collect_all(const TermPtr& t, std::set<Variable>& out);

void collect_all(const FormulaPtr& f, std::set<Variable>& out) {
  for (const auto& t : f->terms) collect_all(t, out);
  if (f->is_quantifier()) out.insert(f->bound);
  for (const auto& s : f->subs) collect_all(s, out);
}

void collect_all(const TermPtr& t, std::set<Variable>& out) {
  if (t->kind == Term::Kind::Var) out.insert(t->var);
  for (const auto& a : t->args) collect_all(a, out);
  if (t->cond) collect_all(t->cond, out);
}

void collect_symbols(const TermPtr& t, std::set<SymbolRef>& out);

void collect_symbols(const FormulaPtr& f, std::set<SymbolRef>& out) {
  if (f->kind == Formula::Kind::Pred) out.insert({f->symbol, f->tag});
  for (const auto& t : f->terms) collect_symbols(t, out);
  for (const auto& s : f->subs) collect_symbols(s, out);
}

void collect_symbols(const TermPtr& t, std::set<SymbolRef>& out) {
  if (t->kind == Term::Kind::App) out.insert({t->symbol, t->tag});
  for (const auto& a : t->args) collect_symbols(a, out);
  if (t->cond) collect_symbols(t->cond, out);
}

}  // namespace

std::set<Variable> free_variables(const FormulaPtr& f) {
  std::set<Variable> bound, out;
  collect_free(f, bound, out);
  return out;
}

std::set<Variable> free_variables(const TermPtr& t) {
  std::set<Variable> bound, out;
  collect_free(t, bound, out);
  return out;
}

std::set<Variable> all_variables(const FormulaPtr& f) {
  std::set<Variable> out;
  collect_all(f, out);
  return out;
}

bool mentions_variable_name(const FormulaPtr& f, const std::string& name) {
  for (const auto& v : all_variables(f))
    if (v.name == name) return true;
  return false;
}

std::set<SymbolRef> symbols_of(const FormulaPtr& f) {
  std::set<SymbolRef> out;
  collect_symbols(f, out);
  return out;
}

std::set<SymbolRef> symbols_of(const TermPtr& t) {
  std::set<SymbolRef> out;
  collect_symbols(t, out);
  return out;
}

std::set<Tag> tags_of(const FormulaPtr& f) {
  std::set<Tag> out;
  for (const auto& s : symbols_of(f)) out.insert(s.tag);
  return out;
}

bool equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->sort != b->sort) return false;
  switch (a->kind) {
    case Term::Kind::Var: return a->var == b->var;
    case Term::Kind::Int: return a->value == b->value;
    case Term::Kind::App:
      if (a->symbol != b->symbol || a->tag != b->tag) return false;
      break;
    case Term::Kind::Ite:
      if (!equal(a->cond, b->cond)) return false;
      break;
    default: break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  if (a->kind == Formula::Kind::Pred && (a->symbol != b->symbol || a->tag != b->tag)) return false;
  if (a->is_quantifier() && a->bound != b->bound) return false;
  if (a->terms.size() != b->terms.size() || a->subs.size() != b->subs.size()) return false;
  for (size_t i = 0; i < a->terms.size(); ++i)
    if (!equal(a->terms[i], b->terms[i])) return false;
  for (size_t i = 0; i < a->subs.size(); ++i)
    if (!equal(a->subs[i], b->subs[i])) return false;
  return true;
}

namespace {

void check_term(const TermPtr& t, const Vocabulary& vocab) {
  switch (t->kind) {
    case Term::Kind::Var:
      if (t->var.sort != kIntSort) vocab.sort(t->var.sort);
      return;
    case Term::Kind::Int: return;
    case Term::Kind::Add:
    case Term::Kind::Sub:
      for (const auto& a : t->args) {
        check_term(a, vocab);
        require_int(a, "arithmetic");
      }
      return;
    case Term::Kind::Ite:
      check_well_sorted(t->cond, vocab);
      for (const auto& a : t->args) check_term(a, vocab);
      if (t->args[0]->sort != t->args[1]->sort) throw IllFormed("if-then-else branch sorts differ");
      return;
    case Term::Kind::App: {
      const auto& d = vocab.symbol(t->symbol);
      if (d.is_relation()) throw IllFormed("relation '" + d.name + "' used as a term");
      if (d.arity() != t->args.size()) throw IllFormed("arity mismatch for '" + d.name + "'");
      if (d.result != t->sort) throw IllFormed("result sort mismatch for '" + d.name + "'");
      for (size_t i = 0; i < t->args.size(); ++i) {
        check_term(t->args[i], vocab);
        if (t->args[i]->sort != d.args[i]) throw IllFormed("argument sort mismatch for '" + d.name + "'");
      }
      return;
    }
  }
}

}  // namespace

void check_well_sorted(const FormulaPtr& f, const Vocabulary& vocab) {
  switch (f->kind) {
    case Formula::Kind::Eq:
      for (const auto& t : f->terms) check_term(t, vocab);
      if (f->terms[0]->sort != f->terms[1]->sort) throw IllFormed("equality between different sorts");
      return;
    case Formula::Kind::Less:
    case Formula::Kind::LessEq:
      for (const auto& t : f->terms) {
        check_term(t, vocab);
        require_int(t, "comparison");
      }
      return;
    case Formula::Kind::Pred: {
      const auto& d = vocab.symbol(f->symbol);
      if (!d.is_relation()) throw IllFormed("'" + d.name + "' is not a relation");
      if (d.arity() != f->terms.size()) throw IllFormed("arity mismatch for '" + d.name + "'");
      for (size_t i = 0; i < f->terms.size(); ++i) {
        check_term(f->terms[i], vocab);
        if (f->terms[i]->sort != d.args[i]) throw IllFormed("argument sort mismatch for '" + d.name + "'");
      }
      return;
    }
    case Formula::Kind::Forall:
    case Formula::Kind::Exists:
      if (f->bound.sort != kIntSort) vocab.sort(f->bound.sort);
      check_well_sorted(f->subs[0], vocab);
      return;
    default:
      for (const auto& s : f->subs) check_well_sorted(s, vocab);
  }
}

// ---------------------------------------------------------------------------
// Retagging

namespace {

Tag map_tag(Tag tag, bool rigid, const TagMap& map, const std::string& symbol) {
  Tag base = collapse_tag(tag, rigid);
  auto it = map.find(base);
  if (it == map.end())
    throw IllFormed("retag: occurrence of '" + symbol + "' carries tag " + tag_name(base) + " outside the mapping");
  return collapse_tag(it->second, rigid);
}

}  // namespace

TermPtr retag(const TermPtr& t, const TagMap& map) {
  switch (t->kind) {
    case Term::Kind::Var:
    case Term::Kind::Int: return t;
    case Term::Kind::App: {
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(retag(a, map));
      return mk_app_raw(t->symbol, t->sort, std::move(args), map_tag(t->tag, t->rigid, map, t->symbol), t->rigid);
    }
    case Term::Kind::Add: return mk_add(retag(t->args[0], map), retag(t->args[1], map));
    case Term::Kind::Sub: return mk_sub(retag(t->args[0], map), retag(t->args[1], map));
    case Term::Kind::Ite: return mk_ite(retag(t->cond, map), retag(t->args[0], map), retag(t->args[1], map));
  }
  return t;
}

FormulaPtr retag(const FormulaPtr& f, const TagMap& map) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False: return f;
    case Formula::Kind::Pred: {
      std::vector<TermPtr> args;
      for (const auto& a : f->terms) args.push_back(retag(a, map));
      return mk_pred_raw(f->symbol, std::move(args), map_tag(f->tag, f->rigid, map, f->symbol), f->rigid);
    }
    default: break;
  }
  auto g = std::make_shared<Formula>(*f);
  for (auto& t : g->terms) t = retag(t, map);
  for (auto& s : g->subs) s = retag(s, map);
  return g;
}

FormulaPtr retag(const FormulaPtr& f, Tag from, Tag to) { return retag(f, TagMap{{from, to}}); }

// ---------------------------------------------------------------------------
// Substitution

std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!taken.count(candidate)) return candidate;
  }
}

TermPtr substitute(const TermPtr& t, const Binding& binding) {
  if (binding.empty()) return t;
  switch (t->kind) {
    case Term::Kind::Var: {
      auto it = binding.find(t->var);
      if (it == binding.end()) return t;
      if (it->second->sort != t->var.sort)
        throw IllFormed("substitution of sort '" + it->second->sort + "' for variable '" + t->var.name + "' of sort '" +
                        t->var.sort + "'");
      return it->second;
    }
    case Term::Kind::Int: return t;
    case Term::Kind::App: {
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(substitute(a, binding));
      return mk_app_raw(t->symbol, t->sort, std::move(args), t->tag, t->rigid);
    }
    case Term::Kind::Add: return mk_add(substitute(t->args[0], binding), substitute(t->args[1], binding));
    case Term::Kind::Sub: return mk_sub(substitute(t->args[0], binding), substitute(t->args[1], binding));
    case Term::Kind::Ite:
      return mk_ite(substitute(t->cond, binding), substitute(t->args[0], binding), substitute(t->args[1], binding));
  }
  return t;
}

FormulaPtr substitute(const FormulaPtr& f, const Binding& binding) {
  if (binding.empty()) return f;
  if (f->is_quantifier()) {
    const auto body_free = free_variables(f->subs[0]);
    Binding inner;
    for (const auto& [v, t] : binding)
      if (v != f->bound && body_free.count(v)) inner.emplace(v, t);
    if (inner.empty()) return f;
    std::set<std::string> incoming;
    for (const auto& [v, t] : inner)
      for (const auto& fv : free_variables(t)) incoming.insert(fv.name);
    Variable bound = f->bound;
    FormulaPtr body = f->subs[0];
    if (incoming.count(bound.name)) {
      std::set<std::string> taken = incoming;
      for (const auto& v : all_variables(body)) taken.insert(v.name);
      for (const auto& [v, t] : inner) taken.insert(v.name);
      Variable renamed{fresh_name(bound.name, taken), bound.sort};
      body = substitute(body, Binding{{bound, mk_var(renamed)}});
      bound = renamed;
    }
    body = substitute(body, inner);
    return f->kind == Formula::Kind::Forall ? mk_forall(bound, body) : mk_exists(bound, body);
  }
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False: return f;
    default: break;
  }
  auto g = std::make_shared<Formula>(*f);
  for (auto& t : g->terms) t = substitute(t, binding);
  for (auto& s : g->subs) s = substitute(s, binding);
  if (g->kind == Formula::Kind::Eq && g->terms[0]->sort != g->terms[1]->sort)
    throw IllFormed("substitution produced an ill-sorted equality");
  return g;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string symbol_text(const std::string& name, Tag tag) {
  switch (tag) {
    case Tag::Plain: return name;
    case Tag::Primed: return name + "'";
    case Tag::High: return name + "@h";
    case Tag::Low: return name + "@l";
    case Tag::HighPrimed: return name + "@h'";
    case Tag::LowPrimed: return name + "@l'";
  }
  return name;
}

// Precedence levels shared with the parser: larger binds tighter.
constexpr int kPrecQuant = 0, kPrecIff = 1, kPrecImp = 2, kPrecOr = 3, kPrecAnd = 4, kPrecNot = 5, kPrecAtom = 6;
constexpr int kPrecSum = 7, kPrecPrimary = 8;

void print_term(std::ostream& os, const TermPtr& t, int ctx);
void print_formula(std::ostream& os, const FormulaPtr& f, int ctx);

void print_args(std::ostream& os, const std::vector<TermPtr>& args) {
  os << '(';
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    print_term(os, args[i], kPrecSum);
  }
  os << ')';
}

void print_term(std::ostream& os, const TermPtr& t, int ctx) {
  switch (t->kind) {
    case Term::Kind::Var: os << t->var.name; return;
    case Term::Kind::Int:
      if (t->value < 0 && ctx > kPrecSum) {
        os << '(' << t->value << ')';
      } else {
        os << t->value;
      }
      return;
    case Term::Kind::App:
      os << symbol_text(t->symbol, t->tag);
      if (!t->args.empty()) print_args(os, t->args);
      return;
    case Term::Kind::Add:
    case Term::Kind::Sub: {
      bool paren = ctx > kPrecSum;
      if (paren) os << '(';
      print_term(os, t->args[0], kPrecSum);
      os << (t->kind == Term::Kind::Add ? " + " : " - ");
      print_term(os, t->args[1], kPrecPrimary);
      if (paren) os << ')';
      return;
    }
    case Term::Kind::Ite:
      os << "(if ";
      print_formula(os, t->cond, kPrecQuant);
      os << " then ";
      print_term(os, t->args[0], kPrecSum);
      os << " else ";
      print_term(os, t->args[1], kPrecSum);
      os << ')';
      return;
  }
}

void print_formula(std::ostream& os, const FormulaPtr& f, int ctx) {
  auto open = [&](int prec) {
    bool paren = ctx > prec;
    if (paren) os << '(';
    return paren;
  };
  switch (f->kind) {
    case Formula::Kind::True: os << "true"; return;
    case Formula::Kind::False: os << "false"; return;
    case Formula::Kind::Pred:
      os << symbol_text(f->symbol, f->tag);
      if (!f->terms.empty()) print_args(os, f->terms);
      return;
    case Formula::Kind::Eq:
    case Formula::Kind::Less:
    case Formula::Kind::LessEq: {
      bool p = open(kPrecAtom);
      print_term(os, f->terms[0], kPrecSum);
      os << (f->kind == Formula::Kind::Eq ? " = " : f->kind == Formula::Kind::Less ? " < " : " <= ");
      print_term(os, f->terms[1], kPrecSum);
      if (p) os << ')';
      return;
    }
    case Formula::Kind::Not: {
      const auto& g = f->subs[0];
      if (g->kind == Formula::Kind::Eq) {
        bool p = open(kPrecAtom);
        print_term(os, g->terms[0], kPrecSum);
        os << " != ";
        print_term(os, g->terms[1], kPrecSum);
        if (p) os << ')';
        return;
      }
      os << '!';
      print_formula(os, g, kPrecNot);
      return;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      int prec = f->kind == Formula::Kind::And ? kPrecAnd : kPrecOr;
      bool p = open(prec);
      for (size_t i = 0; i < f->subs.size(); ++i) {
        if (i) os << (f->kind == Formula::Kind::And ? " & " : " | ");
        print_formula(os, f->subs[i], prec + 1);
      }
      if (p) os << ')';
      return;
    }
    case Formula::Kind::Implies: {
      bool p = open(kPrecImp);
      print_formula(os, f->subs[0], kPrecImp + 1);
      os << " -> ";
      print_formula(os, f->subs[1], kPrecImp);
      if (p) os << ')';
      return;
    }
    case Formula::Kind::Iff: {
      bool p = open(kPrecIff);
      print_formula(os, f->subs[0], kPrecIff + 1);
      os << " <-> ";
      print_formula(os, f->subs[1], kPrecIff + 1);
      if (p) os << ')';
      return;
    }
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
      bool p = open(kPrecQuant);
      os << (f->kind == Formula::Kind::Forall ? "forall " : "exists ");
      const Formula* cur = f.get();
      bool first = true;
      while (cur->kind == f->kind) {
        if (!first) os << ", ";
        os << cur->bound.name << ':' << cur->bound.sort;
        first = false;
        const Formula* next = cur->subs[0].get();
        if (next->kind != f->kind) break;
        cur = next;
      }
      os << ". ";
      print_formula(os, cur->subs[0], kPrecQuant);
      if (p) os << ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const TermPtr& t) {
  std::ostringstream os;
  print_term(os, t, kPrecSum);
  return os.str();
}

std::string to_string(const FormulaPtr& f) {
  std::ostringstream os;
  print_formula(os, f, kPrecQuant);
  return os.str();
}

}  // namespace cutoff
