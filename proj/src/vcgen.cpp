#include "cutoff/vcgen.hpp"

#include <set>

#include "cutoff/encode.hpp"

namespace cutoff {

const char* vc_kind_name(VcKind kind) {
  switch (kind) {
    case VcKind::IotaPreservation: return "iota-preservation";
    case VcKind::TauPreservation: return "tau-preservation";
    case VcKind::SafetyPreservation: return "safety-preservation";
    case VcKind::Projectability: return "projectability";
    case VcKind::GammaPreservation: return "gamma-preservation";
    case VcKind::ThetaInitiation: return "theta-initiation";
    case VcKind::ThetaConsecution: return "theta-consecution";
    case VcKind::ExtensionSoundness: return "extension-soundness";
  }
  return "?";
}

const char* vc_part_name(VcPart part) {
  switch (part) {
    case VcPart::Whole: return "whole";
    case VcPart::StutterIncluded: return "stutter-included";
    case VcPart::HintTotality: return "hint-totality";
    case VcPart::HintSufficiency: return "hint-sufficiency";
  }
  return "?";
}

FormulaPtr VerificationCondition::formula() const {
  return mk_forall(params, mk_implies(hypothesis(), conclusion));
}

namespace {

const TagMap kToHigh{{Tag::Plain, Tag::High}};
const TagMap kToLow{{Tag::Plain, Tag::Low}};
const TagMap kStepHigh{{Tag::Plain, Tag::High}, {Tag::Primed, Tag::HighPrimed}};
const TagMap kStepLow{{Tag::Plain, Tag::Low}, {Tag::Primed, Tag::LowPrimed}};
const TagMap kPrimeHighLow{{Tag::High, Tag::HighPrimed}, {Tag::Low, Tag::LowPrimed}};
const TagMap kPrimeHigh{{Tag::High, Tag::HighPrimed}};

std::vector<FormulaPtr> gamma_high(const StageContext& ctx) {
  std::vector<FormulaPtr> out;
  for (const auto& a : ctx.gamma) out.push_back(retag(a, kToHigh));
  return out;
}

// Γ^{h'}: only axioms that mention mutable symbols differ from Γ^h.
std::vector<FormulaPtr> gamma_high_primed(const StageContext& ctx) {
  std::vector<FormulaPtr> out;
  for (const auto& a : ctx.gamma) {
    FormulaPtr h = retag(a, kToHigh);
    FormulaPtr hp = retag(a, Tag::Plain, Tag::HighPrimed);
    if (!equal(h, hp)) out.push_back(hp);
  }
  return out;
}

FormulaPtr tau(const StageContext& ctx) {
  std::vector<FormulaPtr> ds;
  for (const auto& t : ctx.transitions) ds.push_back(mk_exists(t.params, t.body()));
  return mk_or(ds);
}

VerificationCondition make(std::string id, VcKind kind, std::vector<Variable> params, std::vector<FormulaPtr> hyps,
                           FormulaPtr concl, const StageContext& ctx) {
  VerificationCondition vc;
  vc.id = std::move(id);
  vc.kind = kind;
  vc.params = std::move(params);
  vc.hypotheses = std::move(hyps);
  vc.conclusion = std::move(concl);
  vc.vocab = ctx.vocab;
  return vc;
}

void append(std::vector<FormulaPtr>& to, const std::vector<FormulaPtr>& from) { to.insert(to.end(), from.begin(), from.end()); }

// Γ^h ∧ Γ^{h'} ∧ η ∧ η'
std::vector<FormulaPtr> step_context(const StageContext& ctx, const FormulaPtr& eta) {
  std::vector<FormulaPtr> h = gamma_high(ctx);
  append(h, gamma_high_primed(ctx));
  h.push_back(eta);
  h.push_back(retag(eta, kPrimeHighLow));
  return h;
}

FormulaPtr instantiate(const TransitionDef& t, const std::vector<Variable>& args) {
  Binding b;
  for (size_t i = 0; i < t.params.size(); ++i) b[t.params[i]] = mk_var(args[i]);
  return substitute(t.body(), b);
}

const TransitionDef& find(const StageContext& ctx, const std::string& name) {
  for (const auto& t : ctx.transitions)
    if (t.name == name) return t;
  throw IllFormed("unknown transition '" + name + "'");
}

FormulaPtr constants_to_vars(const FormulaPtr& f, const std::map<std::string, Variable>& m);

TermPtr constants_to_vars(const TermPtr& t, const std::map<std::string, Variable>& m) {
  if (t->kind == Term::Kind::App && t->args.empty()) {
    auto it = m.find(t->symbol);
    if (it != m.end()) return mk_var(it->second);
  }
  if (t->kind == Term::Kind::Ite)
    return mk_ite(constants_to_vars(t->cond, m), constants_to_vars(t->args[0], m), constants_to_vars(t->args[1], m));
  if (t->args.empty()) return t;
  auto u = std::make_shared<Term>(*t);
  for (auto& a : u->args) a = constants_to_vars(a, m);
  return u;
}

FormulaPtr constants_to_vars(const FormulaPtr& f, const std::map<std::string, Variable>& m) {
  auto g = std::make_shared<Formula>(*f);
  for (auto& t : g->terms) t = constants_to_vars(t, m);
  for (auto& s : g->subs) s = constants_to_vars(s, m);
  return g;
}

}  // namespace

std::vector<VerificationCondition> generate_vcs(const StageContext& ctx, const HighLowUpdate& update, int64_t k) {
  const Variable z = update.z();
  const EtaFormula eta = build_eta(update, ctx.vocab);
  const FormulaPtr theta = update.theta();
  const FormulaPtr iota_h = retag(ctx.iota, kToHigh);
  const FormulaPtr tau_h = retag(tau(ctx), kStepHigh);
  const FormulaPtr bad = negate(ctx.safety);
  std::vector<VerificationCondition> out;

  auto hyps = gamma_high(ctx);
  hyps.push_back(iota_h);
  hyps.push_back(eta.formula);
  out.push_back(make("iota-preservation", VcKind::IotaPreservation, {z}, hyps,
                     retag(z_exclude(ctx.iota, z), kToLow), ctx));

  hyps = step_context(ctx, eta.formula);
  hyps.push_back(tau_h);
  out.push_back(make("tau-preservation", VcKind::TauPreservation, {z}, hyps,
                     retag(z_exclude(mk_or(tau(ctx), idle_formula(ctx.vocab)), z), kStepLow), ctx));

  hyps = gamma_high(ctx);
  hyps.push_back(retag(bad, kToHigh));
  hyps.push_back(eta.formula);
  out.push_back(make("safety-preservation", VcKind::SafetyPreservation, {z}, hyps,
                     retag(z_exclude(ctx.low_safety ? negate(ctx.low_safety) : bad, z), kToLow), ctx));

  hyps = gamma_high(ctx);
  hyps.push_back(eta.formula);
  out.push_back(make("projectability", VcKind::Projectability, {z}, hyps,
                     retag(closure_formula(ctx.vocab, z), kToLow), ctx));

  out.push_back(make("gamma-preservation", VcKind::GammaPreservation, {z}, hyps,
                     retag(z_exclude(mk_and(ctx.gamma), z), kToLow), ctx));

  hyps = gamma_high(ctx);
  hyps.push_back(iota_h);
  hyps.push_back(size_gt(update.sort, k));
  out.push_back(make("theta-initiation", VcKind::ThetaInitiation, {}, hyps, mk_exists(z, theta), ctx));

  hyps = gamma_high(ctx);
  append(hyps, gamma_high_primed(ctx));
  hyps.push_back(theta);
  hyps.push_back(tau_h);
  out.push_back(make("theta-consecution", VcKind::ThetaConsecution, {z}, hyps, retag(theta, kPrimeHigh), ctx));
  return out;
}

std::vector<VerificationCondition> split_per_transition(const std::vector<VerificationCondition>& vcs,
                                                        const StageContext& ctx, const HighLowUpdate& update) {
  const Variable z = update.z();
  std::vector<VerificationCondition> out;
  for (const auto& vc : vcs) {
    if (vc.kind != VcKind::TauPreservation && vc.kind != VcKind::ThetaConsecution) {
      out.push_back(vc);
      continue;
    }
    for (const auto& t : ctx.transitions) {
      VerificationCondition s = vc;
      s.transition = t.name;
      s.hypotheses.back() = retag(t.body(), kStepHigh);
      s.params = {z};
      s.params.insert(s.params.end(), t.params.begin(), t.params.end());
      if (vc.kind == VcKind::TauPreservation) {
        s.part = VcPart::StutterIncluded;
        s.id = vc.id + "." + t.name + "." + vc_part_name(s.part);
      } else {
        s.id = vc.id + "." + t.name;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

bool hint_is_functional(const Hint& hint) {
  std::set<Variable> low(hint.low.begin(), hint.low.end());
  std::set<Variable> assigned;
  auto cs = conjuncts(hint.formula);
  for (const auto& c : cs) {
    if (c->kind != Formula::Kind::Eq) return false;
    bool ok = false;
    for (int side = 0; side < 2 && !ok; ++side) {
      const TermPtr& lhs = c->terms[side];
      const TermPtr& rhs = c->terms[1 - side];
      if (lhs->kind != Term::Kind::Var || !low.count(lhs->var) || assigned.count(lhs->var)) continue;
      bool clean = true;
      for (const auto& v : free_variables(rhs)) clean &= !low.count(v);
      if (clean) {
        assigned.insert(lhs->var);
        ok = true;
      }
    }
    if (!ok) return false;
  }
  return assigned.size() == low.size();
}

std::vector<VerificationCondition> apply_hint(const VerificationCondition& split, const Hint& hint,
                                              const StageContext& ctx, const HighLowUpdate& update) {
  if (split.kind != VcKind::TauPreservation || split.transition != hint.transition)
    throw IllFormed("hint for '" + hint.transition + "' applied to '" + split.id + "'");
  const Variable z = update.z();
  const TransitionDef& src = find(ctx, hint.transition);
  const TransitionDef& tgt = find(ctx, hint.target);
  const std::string base = std::string(vc_kind_name(VcKind::TauPreservation)) + "." + hint.transition + ".";

  std::vector<FormulaPtr> hyps = step_context(ctx, build_eta(update, ctx.vocab).formula);
  hyps.push_back(retag(instantiate(src, hint.high), kStepHigh));

  std::vector<VerificationCondition> out;
  std::vector<Variable> params{z};
  params.insert(params.end(), hint.high.begin(), hint.high.end());
  if (!hint_is_functional(hint)) {
    auto vc = make(base + vc_part_name(VcPart::HintTotality), VcKind::TauPreservation, params, hyps,
                   mk_exists(hint.low, hint.formula), ctx);
    vc.transition = hint.transition;
    vc.part = VcPart::HintTotality;
    out.push_back(std::move(vc));
  }

  params.insert(params.end(), hint.low.begin(), hint.low.end());
  hyps.push_back(hint.formula);
  std::vector<FormulaPtr> step;
  for (const auto& v : hint.low)
    if (v.sort == z.sort) step.push_back(mk_neq(mk_var(v), mk_var(z)));
  step.push_back(retag(z_exclude(instantiate(tgt, hint.low), z), kStepLow));
  FormulaPtr concl = mk_or(mk_and(step), retag(z_exclude(idle_formula(ctx.vocab), z), kStepLow));
  auto vc = make(base + vc_part_name(VcPart::HintSufficiency), VcKind::TauPreservation, params, hyps, concl, ctx);
  vc.transition = hint.transition;
  vc.part = VcPart::HintSufficiency;
  out.push_back(std::move(vc));
  return out;
}

VerificationCondition extension_soundness(const StageContext& before, const StageExtension& ext) {
  std::set<std::string> taken;
  for (const auto& a : ext.axioms)
    for (const auto& v : all_variables(a)) taken.insert(v.name);
  std::map<std::string, Variable> m;
  std::vector<Variable> vars;
  for (const auto& c : ext.constants) {
    std::string name = fresh_name("C_" + c.name, taken);
    taken.insert(name);
    vars.push_back(Variable{name, c.result});
    m[c.name] = vars.back();
  }
  std::vector<FormulaPtr> body;
  for (const auto& a : ext.axioms) body.push_back(constants_to_vars(a, m));
  return make("extension-soundness", VcKind::ExtensionSoundness, {}, before.gamma, mk_exists(vars, mk_and(body)),
              before);
}

ProofPlan plan_multisort(const ProtocolSpec& spec, const CutoffTask& task) {
  ProofPlan plan;
  std::vector<FormulaPtr> base = spec.axioms;
  for (const auto& s : spec.vocab.sorts()) {
    if (s.kind == SortKind::Bounded) {
      base.push_back(size_le(s.name, s.bound));
      plan.final_caps[s.name] = s.bound;
    }
  }
  std::set<std::string> seen;
  for (const auto& st : task.stages) {
    const Sort* s = spec.vocab.find_sort(st.sort);
    if (!s) throw Diagnostic("stage for undeclared sort '" + st.sort + "'");
    if (s->kind != SortKind::Uninterpreted)
      throw Diagnostic("stage sort '" + st.sort + "' is not a finite-unbounded sort");
    if (!seen.insert(st.sort).second) throw Diagnostic("two stages for sort '" + st.sort + "'");
  }
  for (const auto& s : spec.vocab.sorts())
    if (s.kind == SortKind::Uninterpreted && !seen.count(s.name))
      throw Diagnostic("sort '" + s.name + "' has no cutoff stage");

  Vocabulary vocab = spec.vocab;
  std::vector<FormulaPtr> ext_axioms;
  std::vector<std::pair<std::string, int64_t>> caps;
  for (size_t i = 0; i < task.stages.size(); ++i) {
    const HighLowUpdate& raw = task.stages[i];
    PlanStage ps;
    ps.sort = raw.sort;
    ps.label = std::to_string(i + 1) + "-" + raw.sort;
    ps.injected = caps;

    StageContext before;
    before.vocab = vocab;
    before.gamma = base;
    for (const auto& [s, k] : caps) before.gamma.push_back(size_le(s, k));
    append(before.gamma, ext_axioms);
    before.iota = spec.iota();
    before.safety = spec.safety;
    before.low_safety = spec.unskolemized_safety;
    before.transitions = spec.transitions;

    StageContext ctx = before;
    if (!raw.extension.constants.empty() || !raw.extension.axioms.empty()) {
      ps.vcs.push_back(extension_soundness(before, raw.extension));
      vocab = extend_vocabulary(vocab, raw.extension);
      append(ext_axioms, raw.extension.axioms);
      ctx.vocab = vocab;
      append(ctx.gamma, raw.extension.axioms);
    }
    ps.update = apply_defaults(raw, vocab);
    ps.k = *ps.update.bound;
    if (ps.k < 1) throw Diagnostic("cutoff bound for sort '" + ps.sort + "' must be at least 1");
    ps.context = ctx;

    for (auto& vc : split_per_transition(generate_vcs(ctx, ps.update, ps.k), ctx, ps.update)) {
      auto h = ps.update.hints.find(vc.transition);
      if (vc.kind == VcKind::TauPreservation && h != ps.update.hints.end()) {
        for (auto& part : apply_hint(vc, h->second, ctx, ps.update)) ps.vcs.push_back(std::move(part));
      } else {
        ps.vcs.push_back(std::move(vc));
      }
    }
    caps.emplace_back(ps.sort, ps.k);
    plan.final_caps[ps.sort] = ps.k;
    plan.stages.push_back(std::move(ps));
  }
  return plan;
}

}  // namespace cutoff
