#include "cutoff/encode.hpp"

namespace cutoff {

namespace {

TermPtr exclude_term(const TermPtr& t, const Variable& z);

FormulaPtr exclude(const FormulaPtr& f, const Variable& z) {
  using K = Formula::Kind;
  switch (f->kind) {
    case K::True:
    case K::False:
    case K::Eq:
    case K::Pred:
    case K::Less:
    case K::LessEq: {
      bool nested = false;
      for (const auto& t : f->terms) nested |= !equal(exclude_term(t, z), t);
      if (!nested) return f;
      auto g = std::make_shared<Formula>(*f);
      for (auto& t : g->terms) t = exclude_term(t, z);
      return g;
    }
    case K::Forall:
    case K::Exists: {
      FormulaPtr body = exclude(f->subs[0], z);
      if (f->bound.sort != z.sort) return f->kind == K::Forall ? mk_forall(f->bound, body) : mk_exists(f->bound, body);
      FormulaPtr guard = mk_neq(mk_var(f->bound), mk_var(z));
      return f->kind == K::Forall ? mk_forall(f->bound, mk_implies(guard, body))
                                  : mk_exists(f->bound, mk_and(guard, body));
    }
    default: {
      auto g = std::make_shared<Formula>(*f);
      for (auto& s : g->subs) s = exclude(s, z);
      return g;
    }
  }
}

TermPtr exclude_term(const TermPtr& t, const Variable& z) {
  if (t->kind == Term::Kind::Ite) return mk_ite(exclude(t->cond, z), exclude_term(t->args[0], z), exclude_term(t->args[1], z));
  if (t->args.empty()) return t;
  std::vector<TermPtr> args;
  bool changed = false;
  for (const auto& a : t->args) {
    args.push_back(exclude_term(a, z));
    changed |= args.back() != a;
  }
  if (!changed) return t;
  auto u = std::make_shared<Term>(*t);
  u->args = std::move(args);
  return u;
}

std::vector<Variable> arg_vars(const SymbolDecl& d) {
  std::vector<Variable> vs;
  for (size_t i = 0; i < d.args.size(); ++i) vs.push_back(Variable{"x" + std::to_string(i + 1), d.args[i]});
  return vs;
}

std::vector<TermPtr> as_terms(const std::vector<Variable>& vs) {
  std::vector<TermPtr> ts;
  for (const auto& v : vs) ts.push_back(mk_var(v));
  return ts;
}

}  // namespace

FormulaPtr z_exclude(const FormulaPtr& f, const Variable& z) {
  if (mentions_variable_name(f, z.name))
    throw IllFormed("z-exclusion requires that '" + z.name + "' does not occur in the formula");
  return exclude(f, z);
}

EtaFormula build_eta(const HighLowUpdate& update, const Vocabulary& vocab) {
  EtaFormula eta;
  eta.theta = update.theta();
  std::vector<FormulaPtr> parts{eta.theta};
  for (const auto& d : vocab.symbols()) {
    if (d.is_relation()) {
      auto it = update.relations.find(d.name);
      if (it == update.relations.end()) throw IllFormed("no update for relation '" + d.name + "'");
      const auto& u = it->second;
      FormulaPtr part = mk_forall(u.params, mk_iff(mk_pred(d, as_terms(u.params), Tag::Low), u.formula));
      eta.relation_parts[d.name] = part;
      parts.push_back(part);
    } else {
      auto it = update.functions.find(d.name);
      if (it == update.functions.end()) throw IllFormed("no update for function '" + d.name + "'");
      const auto& u = it->second;
      FormulaPtr part = mk_forall(u.params, mk_eq(mk_app(d, as_terms(u.params), Tag::Low), u.term));
      eta.function_parts[d.name] = part;
      parts.push_back(part);
    }
  }
  eta.formula = mk_and(parts);
  return eta;
}

FormulaPtr idle_formula(const Vocabulary& vocab) {
  std::vector<FormulaPtr> parts;
  for (const auto& d : vocab.symbols()) {
    if (!d.is_mutable) continue;
    auto vs = arg_vars(d);
    auto args = as_terms(vs);
    if (d.is_relation()) {
      parts.push_back(mk_forall(vs, mk_iff(mk_pred(d, args, Tag::Primed), mk_pred(d, args, Tag::Plain))));
    } else {
      parts.push_back(mk_forall(vs, mk_eq(mk_app(d, args, Tag::Primed), mk_app(d, args, Tag::Plain))));
    }
  }
  return mk_and(parts);
}

FormulaPtr closure_formula(const Vocabulary& vocab, const Variable& z) {
  std::vector<FormulaPtr> parts;
  for (const auto& d : vocab.symbols()) {
    if (d.is_relation() || d.result != z.sort) continue;
    auto vs = arg_vars(d);
    std::vector<FormulaPtr> guards;
    for (const auto& v : vs)
      if (v.sort == z.sort) guards.push_back(mk_neq(mk_var(v), mk_var(z)));
    FormulaPtr concl = mk_neq(mk_app(d, as_terms(vs)), mk_var(z));
    parts.push_back(mk_forall(vs, guards.empty() ? concl : mk_implies(mk_and(guards), concl)));
  }
  return mk_and(parts);
}

FormulaPtr size_gt(const std::string& sort, int64_t k) {
  if (k < 0) throw IllFormed("size bound must be nonnegative");
  std::vector<Variable> xs;
  for (int64_t i = 1; i <= k + 1; ++i) xs.push_back(Variable{"x" + std::to_string(i), sort});
  std::vector<FormulaPtr> distinct;
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = i + 1; j < xs.size(); ++j) distinct.push_back(mk_neq(mk_var(xs[i]), mk_var(xs[j])));
  return mk_exists(xs, mk_and(distinct));
}

FormulaPtr size_le(const std::string& sort, int64_t k) {
  if (k < 0) throw IllFormed("size bound must be nonnegative");
  std::vector<Variable> xs;
  for (int64_t i = 1; i <= k; ++i) xs.push_back(Variable{"x" + std::to_string(i), sort});
  Variable x{"x", sort};
  std::vector<FormulaPtr> cases;
  for (const auto& xi : xs) cases.push_back(mk_eq(mk_var(x), mk_var(xi)));
  return mk_exists(xs, mk_forall(x, mk_or(cases)));
}

}  // namespace cutoff
