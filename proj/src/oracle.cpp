#include "cutoff/oracle.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace cutoff {

std::vector<std::vector<int64_t>> size_combinations(const Vocabulary& vocab, const SizeBounds& bounds,
                                                    const std::set<std::string>* relevant) {
  std::vector<int64_t> lo, hi;
  for (const auto& s : vocab.sorts()) {
    if (s.kind == SortKind::Integer) {
      lo.push_back(0);
      hi.push_back(0);
      continue;
    }
    if (relevant && !relevant->count(s.name)) {
      lo.push_back(1);
      hi.push_back(1);
      continue;
    }
    auto it = bounds.max.find(s.name);
    int64_t top;
    if (s.kind == SortKind::Bounded) {
      top = it == bounds.max.end() ? s.bound : std::min(s.bound, it->second);
    } else {
      if (it == bounds.max.end()) throw IllFormed("no size bound given for sort '" + s.name + "'");
      top = it->second;
    }
    if (top < 1) throw IllFormed("size bound for sort '" + s.name + "' must be at least 1");
    lo.push_back(1);
    hi.push_back(top);
  }
  std::vector<std::vector<int64_t>> out;
  std::vector<int64_t> cur = lo;
  for (;;) {
    out.push_back(cur);
    size_t i = cur.size();
    while (i > 0) {
      --i;
      if (cur[i] < hi[i]) {
        ++cur[i];
        break;
      }
      cur[i] = lo[i];
      if (i == 0) return out;
    }
    if (cur.empty()) return out;
  }
}

// ---------------------------------------------------------------------------
// Search

struct Search::Impl {
  struct Def {
    int slot = -1;
    bool relation = true;
    int index = -1;             // into formulas or terms
    std::vector<int> arg_var;   // table dimension -> extra frame position
    bool int_result = false;
  };
  struct Step {
    int param = -1;
    int slot = -1;
    std::vector<int> defs;
    std::vector<int> checks;
    std::vector<bool> pending;  // slots computed by this step's defs
  };

  SignaturePtr sig;
  std::vector<Variable> params;
  std::vector<Compiled> formulas;
  std::vector<Compiled> terms;
  std::vector<Def> defs;
  std::vector<Step> steps;
  size_t frame = 0;
  bool window_relative = false;
  mutable bool clipped = false;  // a computed integer left the window

  int slot_of(const SymbolRef& r) const {
    const SymbolDecl& d = sig->vocabulary().symbol(r.name);
    int s = sig->find_slot(r.name, collapse_tag(r.tag, !d.is_mutable));
    if (s < 0) throw IllFormed("search signature lacks " + r.name + "@" + tag_name(r.tag));
    return s;
  }

  // Resource ids: slots, then parameters.
  std::vector<int> deps(const std::set<SymbolRef>& refs, const std::set<Variable>& fv) const {
    std::set<int> out;
    for (const auto& r : refs) out.insert(slot_of(r));
    for (size_t i = 0; i < params.size(); ++i)
      if (fv.count(params[i])) out.insert(static_cast<int>(sig->slot_count() + i));
    return {out.begin(), out.end()};
  }

  void build(const std::vector<FormulaPtr>& constraints, const std::vector<int>& fixed_slots) {
    const size_t nslots = sig->slot_count();
    const size_t nres = nslots + params.size();
    std::vector<bool> fixed(nslots, false);
    for (int s : fixed_slots) fixed[s] = true;
    std::set<Variable> param_set(params.begin(), params.end());

    std::vector<FormulaPtr> flat;
    for (const auto& c : constraints)
      for (const auto& x : conjuncts(c)) flat.push_back(x);
    if (std::any_of(constraints.begin(), constraints.end(),
                    [](const FormulaPtr& c) { return c->kind == Formula::Kind::False; }))
      flat = {mk_false()};

    std::vector<int> defined_by(nslots, -1);
    std::vector<std::vector<int>> def_deps;
    std::vector<int> check_ids;
    std::vector<std::vector<int>> check_deps;

    auto reaches = [&](int from, int target) {
      std::vector<int> stack{from};
      std::set<int> seen;
      while (!stack.empty()) {
        int r = stack.back();
        stack.pop_back();
        if (r == target) return true;
        if (r >= static_cast<int>(nslots) || !seen.insert(r).second || defined_by[r] < 0) continue;
        for (int d : def_deps[defined_by[r]]) stack.push_back(d);
      }
      return false;
    };

    for (const auto& c : flat) {
      if (try_def(c, fixed, param_set, defined_by, def_deps, reaches)) continue;
      check_ids.push_back(static_cast<int>(formulas.size()));
      formulas.emplace_back(*sig, c, params);
      window_relative |= formulas.back().window_relative();
      check_deps.push_back(deps(symbols_of(c), free_variables(c)));
    }

    for (size_t s = 0; s < nslots; ++s) {
      const SlotInfo& info = sig->info(static_cast<int>(s));
      if (!fixed[s] && defined_by[s] < 0 && !info.relation && sig->is_int_sort(info.result_sort)) window_relative = true;
    }
    for (const auto& p : params)
      if (sig->is_int_sort(sig->sort_index(p.sort))) window_relative = true;

    // Greedy schedule: assign the unit that completes most pending checks.
    std::vector<bool> ready(nres, false);
    for (size_t s = 0; s < nslots; ++s) ready[s] = fixed[s];
    std::vector<bool> def_done(defs.size(), false), check_done(check_ids.size(), false);
    auto all_ready = [&](const std::vector<int>& ds, const std::vector<bool>& r) {
      return std::all_of(ds.begin(), ds.end(), [&](int d) { return r[d]; });
    };
    auto closure = [&](std::vector<bool>& r, Step* step, std::vector<bool>& ddone) {
      for (bool changed = true; changed;) {
        changed = false;
        for (size_t d = 0; d < defs.size(); ++d) {
          if (ddone[d] || !all_ready(def_deps[d], r)) continue;
          ddone[d] = true;
          r[defs[d].slot] = true;
          if (step) step->defs.push_back(static_cast<int>(d));
          changed = true;
        }
      }
    };
    auto settle = [&](Step& step) {
      closure(ready, &step, def_done);
      for (size_t c = 0; c < check_ids.size(); ++c) {
        if (check_done[c] || !all_ready(check_deps[c], ready)) continue;
        check_done[c] = true;
        step.checks.push_back(check_ids[c]);
      }
    };

    Step first;
    settle(first);
    steps.push_back(first);

    std::vector<int> units;
    for (size_t i = 0; i < params.size(); ++i) units.push_back(static_cast<int>(nslots + i));
    for (size_t s = 0; s < nslots; ++s)
      if (!fixed[s] && defined_by[s] < 0) units.push_back(static_cast<int>(s));
    std::vector<bool> used(units.size(), false);
    auto weight_of = [&](int unit) {
      return unit >= static_cast<int>(nslots) ? 0 : static_cast<int>(sig->info(unit).arg_sorts.size()) + 1;
    };
    auto completes_with = [&](std::initializer_list<int> extra) {
      std::vector<bool> r = ready;
      std::vector<bool> dd = def_done;
      for (int e : extra) r[e] = true;
      closure(r, nullptr, dd);
      int n = 0;
      for (size_t c = 0; c < check_ids.size(); ++c)
        if (!check_done[c] && all_ready(check_deps[c], r)) ++n;
      return n;
    };
    for (size_t round = 0; round < units.size(); ++round) {
      int best = -1;
      std::tuple<int, int, int> best_score{-1, 0, 0};
      for (size_t u = 0; u < units.size(); ++u) {
        if (used[u]) continue;
        int mentions = 0;
        for (size_t c = 0; c < check_ids.size(); ++c)
          if (!check_done[c] && std::find(check_deps[c].begin(), check_deps[c].end(), units[u]) != check_deps[c].end())
            ++mentions;
        std::tuple<int, int, int> score{completes_with({units[u]}), mentions, -weight_of(units[u])};
        if (best < 0 || score > best_score) {
          best = static_cast<int>(u);
          best_score = score;
        }
      }
      // A cheap unit that lets more checks of the best unit complete goes
      // first, so the expensive table is pruned by them.
      if (weight_of(units[best]) > 2) {
        int base = std::get<0>(best_score), gain = 0, pick = -1;
        for (size_t v = 0; v < units.size(); ++v) {
          if (used[v] || static_cast<int>(v) == best || weight_of(units[v]) > 2) continue;
          int g = completes_with({units[best], units[v]}) - base - completes_with({units[v]});
          if (g > gain) {
            gain = g;
            pick = static_cast<int>(v);
          }
        }
        if (pick >= 0) best = pick;
      }
      used[best] = true;
      Step step;
      if (units[best] >= static_cast<int>(nslots))
        step.param = units[best] - static_cast<int>(nslots);
      else
        step.slot = units[best];
      ready[units[best]] = true;
      settle(step);
      steps.push_back(step);
    }
    for (auto& st : steps) {
      st.pending.assign(nslots, false);
      for (int d : st.defs) st.pending[defs[d].slot] = true;
    }
    for (size_t d = 0; d < defs.size(); ++d)
      if (!def_done[d]) throw IllFormed("search could not schedule a computed symbol");
    for (size_t c = 0; c < check_ids.size(); ++c)
      if (!check_done[c]) throw IllFormed("search could not schedule a constraint");
  }

  template <class Reaches>
  bool try_def(const FormulaPtr& c, const std::vector<bool>& fixed, const std::set<Variable>& param_set,
               std::vector<int>& defined_by, std::vector<std::vector<int>>& def_deps, Reaches& reaches) {
    std::vector<Variable> qvars;
    FormulaPtr f = c;
    while (f->kind == Formula::Kind::Forall) {
      qvars.push_back(f->bound);
      f = f->subs[0];
    }
    std::set<Variable> qset(qvars.begin(), qvars.end());
    if (qset.size() != qvars.size()) return false;
    for (const auto& q : qvars)
      if (param_set.count(q)) return false;

    for (int side = 0; side < 2; ++side) {
      SymbolRef lhs;
      const std::vector<TermPtr>* args = nullptr;
      bool relation = false;
      FormulaPtr rhs_f;
      TermPtr rhs_t;
      if (f->kind == Formula::Kind::Iff && f->subs[side]->kind == Formula::Kind::Pred) {
        const auto& p = f->subs[side];
        lhs = {p->symbol, p->tag};
        args = &p->terms;
        relation = true;
        rhs_f = f->subs[1 - side];
      } else if (f->kind == Formula::Kind::Eq && f->terms[side]->kind == Term::Kind::App) {
        const auto& t = f->terms[side];
        lhs = {t->symbol, t->tag};
        args = &t->args;
        rhs_t = f->terms[1 - side];
      } else {
        continue;
      }
      if (args->size() != qvars.size()) continue;
      int slot = slot_of(lhs);
      if (fixed[slot] || defined_by[slot] >= 0) continue;
      std::vector<int> arg_var;
      std::set<Variable> seen;
      bool ok = true;
      for (const auto& a : *args) {
        if (a->kind != Term::Kind::Var || !qset.count(a->var) || !seen.insert(a->var).second) {
          ok = false;
          break;
        }
        arg_var.push_back(static_cast<int>(std::find(qvars.begin(), qvars.end(), a->var) - qvars.begin()));
      }
      if (!ok) continue;
      auto refs = relation ? symbols_of(rhs_f) : symbols_of(rhs_t);
      auto fv = relation ? free_variables(rhs_f) : free_variables(rhs_t);
      for (const auto& v : fv)
        if (!qset.count(v) && !param_set.count(v)) ok = false;
      if (!ok) continue;
      std::vector<int> ds = deps(refs, fv);
      if (std::find(ds.begin(), ds.end(), slot) != ds.end()) continue;
      bool cyclic = false;
      for (int d : ds) cyclic |= reaches(d, slot);
      if (cyclic) continue;

      std::vector<Variable> ext = params;
      ext.insert(ext.end(), qvars.begin(), qvars.end());
      frame = std::max(frame, ext.size());
      Def def;
      def.slot = slot;
      def.relation = relation;
      for (int& a : arg_var) a += static_cast<int>(params.size());
      def.arg_var = arg_var;
      if (relation) {
        def.index = static_cast<int>(formulas.size());
        formulas.emplace_back(*sig, rhs_f, ext);
        window_relative |= formulas.back().window_relative();
      } else {
        def.index = static_cast<int>(terms.size());
        terms.emplace_back(*sig, rhs_t, ext);
        window_relative |= terms.back().window_relative();
        def.int_result = sig->is_int_sort(sig->info(slot).result_sort);
      }
      defined_by[slot] = static_cast<int>(defs.size());
      defs.push_back(def);
      def_deps.push_back(ds);
      return true;
    }
    return false;
  }

  struct Run {
    const Impl& impl;
    Structure& work;
    const SearchCallback& cb;
    uint64_t ceiling;
    uint64_t& examined;
    std::vector<int64_t> frame;
    std::vector<int64_t> tuple;

    void bump() {
      if (++examined > ceiling)
        throw GuardrailExceeded("search exceeded " + std::to_string(ceiling) + " candidate interpretations");
    }

    bool compute(const Def& d) {
      Table& t = work.table(d.slot);
      tuple.assign(t.dims.size(), 0);
      int64_t w = work.int_window();
      do {
        for (size_t i = 0; i < tuple.size(); ++i) frame[d.arg_var[i]] = tuple[i];
        int64_t v = d.relation ? impl.formulas[d.index].holds(work, frame) : impl.terms[d.index].value(work, frame);
        if (d.int_result && (v < -w || v > w)) {
          impl.clipped = true;
          return false;
        }
        t.data[t.offset(tuple)] = v;
      } while (next_tuple(tuple, t.dims));
      return true;
    }

    bool settle(const Step& st) {
      for (int d : st.defs)
        if (!compute(impl.defs[d])) return false;
      for (int c : st.checks)
        if (!impl.formulas[c].holds(work, frame)) return false;
      return true;
    }

    std::pair<int64_t, int64_t> range(int sort) const {
      if (impl.sig->is_int_sort(sort)) return {-work.int_window(), work.int_window()};
      return {0, work.size(sort) - 1};
    }

    // Cells are assigned in row-major order; a prefix is dropped as soon as one
    // of the step's checks is false whatever the remaining cells hold.
    bool fill(size_t i, const Step& st, Table& t, size_t cell, int64_t lo, int64_t hi) {
      const bool last = cell + 1 == t.data.size();
      Compiled::Partial partial{st.slot, cell + 1, &st.pending};
      for (int64_t v = lo; v <= hi; ++v) {
        t.data[cell] = v;
        bump();
        if (last) {
          if (settle(st) && !go(i + 1)) return false;
          continue;
        }
        bool dead = false;
        for (int c : st.checks)
          if (impl.formulas[c].holds3(work, frame, partial) == Compiled::False3) {
            dead = true;
            break;
          }
        if (!dead && !fill(i, st, t, cell + 1, lo, hi)) return false;
      }
      return true;
    }

    bool go(size_t i) {
      if (i == impl.steps.size()) return cb(work, std::span<const int64_t>(frame.data(), impl.params.size()));
      const Step& st = impl.steps[i];
      if (st.param >= 0) {
        auto [lo, hi] = range(impl.sig->sort_index(impl.params[st.param].sort));
        for (int64_t v = lo; v <= hi; ++v) {
          frame[st.param] = v;
          bump();
          if (settle(st) && !go(i + 1)) return false;
        }
        return true;
      }
      if (st.slot >= 0) {
        const SlotInfo& info = impl.sig->info(st.slot);
        Table& t = work.table(st.slot);
        int64_t lo = 0, hi = 1;
        if (!info.relation) std::tie(lo, hi) = range(info.result_sort);
        if (hi < lo) return true;
        if (t.data.empty()) {
          bump();
          return !settle(st) || go(i + 1);
        }
        return fill(i, st, t, 0, lo, hi);
      }
      if (!settle(st)) return true;
      return go(i + 1);
    }
  };
};

Search::Search(SignaturePtr sig, std::vector<Variable> params, const std::vector<FormulaPtr>& constraints,
               const std::vector<int>& fixed)
    : impl_(std::make_unique<Impl>()) {
  impl_->sig = std::move(sig);
  impl_->params = std::move(params);
  impl_->frame = impl_->params.size();
  impl_->build(constraints, fixed);
}

Search::~Search() = default;
Search::Search(Search&&) noexcept = default;

bool Search::window_relative() const { return impl_->window_relative || impl_->clipped; }

bool Search::run(Structure& work, const SearchCallback& cb, uint64_t ceiling, uint64_t& examined) const {
  Impl::Run r{*impl_, work, cb, ceiling, examined, std::vector<int64_t>(std::max<size_t>(impl_->frame, 1), 0), {}};
  return r.go(0);
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

std::set<std::string> sorts_in(const Signature& sig, const std::vector<FormulaPtr>& fs,
                               const std::vector<Variable>& params) {
  std::set<std::string> out;
  for (size_t s = 0; s < sig.slot_count(); ++s) {
    const SlotInfo& info = sig.info(static_cast<int>(s));
    for (int a : info.arg_sorts) out.insert(sig.sorts()[a].name);
    if (info.result_sort >= 0) out.insert(sig.sorts()[info.result_sort].name);
  }
  for (const auto& p : params) out.insert(p.sort);
  for (const auto& f : fs)
    for (const auto& v : all_variables(f)) out.insert(v.sort);
  return out;
}

void check_window(int64_t w) {
  if (w < 0 || w > 100) throw IllFormed("integer window must lie in 0..100");
}

// Compact state identity: sizes then every table entry.
std::string state_key(const Structure& s) {
  std::string key;
  for (int64_t n : s.sizes()) key.push_back(static_cast<char>(n));
  for (size_t i = 0; i < s.signature().slot_count(); ++i)
    for (int64_t v : s.table(static_cast<int>(i)).data) key.push_back(static_cast<char>(v));
  return key;
}

Structure decode_key(const SignaturePtr& sig, const std::string& key, int64_t window) {
  size_t nsorts = sig->sorts().size();
  std::vector<int64_t> sizes;
  for (size_t i = 0; i < nsorts; ++i) sizes.push_back(static_cast<signed char>(key[i]));
  Structure s(sig, sizes, window);
  size_t pos = nsorts;
  for (size_t i = 0; i < sig->slot_count(); ++i)
    for (auto& v : s.table(static_cast<int>(i)).data) v = static_cast<signed char>(key[pos++]);
  return s;
}

SignaturePtr plain_signature(const Vocabulary& vocab, bool primed) {
  auto sig = std::make_shared<Signature>(vocab);
  if (primed)
    sig->add_all({Tag::Plain, Tag::Primed});
  else
    sig->add_all({Tag::Plain});
  return sig;
}

std::vector<FormulaPtr> primed_axioms(const std::vector<FormulaPtr>& axioms) {
  std::vector<FormulaPtr> out;
  for (const auto& a : axioms) {
    FormulaPtr p = retag(a, Tag::Plain, Tag::Primed);
    if (!equal(p, a)) out.push_back(p);
  }
  return out;
}

// Transition relation over one instance: pre-state in the plain slots of a
// two-copy signature, post-state read back from the primed slots.
class Stepper {
 public:
  Stepper(const Vocabulary& vocab, const std::vector<FormulaPtr>& axioms, const std::vector<TransitionDef>& transitions,
          uint64_t ceiling)
      : plain_(plain_signature(vocab, false)), both_(plain_signature(vocab, true)), ceiling_(ceiling),
        transitions_(transitions) {
    std::vector<int> fixed;
    for (size_t s = 0; s < plain_->slot_count(); ++s) {
      const SlotInfo& info = plain_->info(static_cast<int>(s));
      int b = both_->slot(info.symbol, Tag::Plain);
      fixed.push_back(b);
      const SymbolDecl& d = vocab.symbol(info.symbol);
      copy_.emplace_back(b, d.is_mutable ? both_->slot(info.symbol, Tag::Primed) : b);
    }
    auto gp = primed_axioms(axioms);
    for (const auto& t : transitions) {
      std::vector<FormulaPtr> cs = gp;
      cs.insert(cs.begin(), t.body());
      searches_.emplace_back(both_, t.params, cs, fixed);
    }
  }

  const SignaturePtr& plain() const { return plain_; }
  bool window_relative() const {
    bool w = window_relative_;
    for (const auto& s : searches_) w |= s.window_relative();
    return w;
  }

  // cb(transition index, args, post-state); return false to stop.
  template <class F>
  void successors(const Structure& pre, F&& cb) {
    Structure work(both_, pre.sizes(), pre.int_window());
    for (size_t s = 0; s < copy_.size(); ++s) work.table(copy_[s].first).data = pre.table(static_cast<int>(s)).data;
    for (size_t t = 0; t < searches_.size(); ++t) {
      uint64_t examined = 0;
      searches_[t].run(
          work,
          [&](const Structure& w, std::span<const int64_t> args) {
            Structure post(plain_, pre.sizes(), pre.int_window());
            for (size_t s = 0; s < copy_.size(); ++s) post.table(static_cast<int>(s)).data = w.table(copy_[s].second).data;
            return cb(t, args, post);
          },
          ceiling_, examined);
    }
  }

  const TransitionDef& transition(size_t i) const { return transitions_[i]; }

 private:
  SignaturePtr plain_;
  SignaturePtr both_;
  uint64_t ceiling_;
  std::vector<TransitionDef> transitions_;
  std::vector<std::pair<int, int>> copy_;  // plain slot in both_ -> post slot in both_
  std::vector<Search> searches_;
  bool window_relative_ = false;
};

}  // namespace

uint64_t enumerate_structures(const Vocabulary& vocab, const SizeBounds& bounds, const FormulaPtr& constraint,
                              const std::function<bool(const Structure&)>& cb) {
  check_window(bounds.int_window);
  SignaturePtr sig = plain_signature(vocab, false);
  Search search(sig, {}, {constraint});
  uint64_t count = 0, examined = 0;
  for (const auto& sizes : size_combinations(vocab, bounds)) {
    Structure work(sig, sizes, bounds.int_window);
    bool go = search.run(
        work,
        [&](const Structure& s, std::span<const int64_t>) {
          ++count;
          return cb(s);
        },
        bounds.ceiling, examined);
    if (!go) break;
  }
  return count;
}

ValidityResult bounded_validity_check(const VerificationCondition& vc, const SizeBounds& bounds) {
  check_window(bounds.int_window);
  auto sig = std::make_shared<Signature>(vc.vocab);
  std::vector<FormulaPtr> cs = vc.hypotheses;
  cs.push_back(mk_not(vc.conclusion));
  for (const auto& c : cs) sig->add_used(c);
  Search search(sig, vc.params, cs);
  ValidityResult r;
  r.window_relative = search.window_relative();
  auto relevant = sorts_in(*sig, cs, vc.params);
  for (const auto& sizes : size_combinations(vc.vocab, bounds, &relevant)) {
    Structure work(sig, sizes, bounds.int_window);
    bool go = search.run(
        work,
        [&](const Structure& s, std::span<const int64_t> ps) {
          CounterModel cm{s, {}, !r.window_relative};
          for (size_t i = 0; i < vc.params.size(); ++i) cm.params[vc.params[i]] = ps[i];
          r.countermodel = std::move(cm);
          return false;
        },
        bounds.ceiling, r.examined);
    if (!go) {
      r.valid = false;
      break;
    }
  }
  r.window_relative = search.window_relative();
  return r;
}

SafetyResult bounded_safety_check(const ProtocolSpec& spec, const SizeBounds& bounds, uint64_t max_states) {
  check_window(bounds.int_window);
  const Vocabulary& vocab = spec.vocab;
  Stepper stepper(vocab, spec.axioms, spec.transitions, bounds.ceiling);
  const SignaturePtr& sig = stepper.plain();
  std::vector<FormulaPtr> init = spec.axioms;
  init.push_back(spec.iota());
  Search initial(sig, {}, init);
  Compiled safe(*sig, spec.safety, {});

  SafetyResult result;

  struct Node {
    int parent = -1;
    int transition = -1;
    std::vector<int64_t> args;
  };
  for (const auto& sizes : size_combinations(vocab, bounds)) {
    ++result.instances;
    std::vector<std::string> keys;
    std::vector<Node> nodes;
    std::unordered_map<std::string, int> index;
    int bad = -1;
    auto add = [&](const Structure& s, Node n) {
      std::string k = state_key(s);
      if (index.count(k)) return;
      if (result.states + keys.size() >= max_states)
        throw GuardrailExceeded("reachability exceeded " + std::to_string(max_states) + " states");
      index.emplace(k, static_cast<int>(keys.size()));
      keys.push_back(std::move(k));
      nodes.push_back(std::move(n));
      if (bad < 0 && !safe.holds(s, {})) bad = static_cast<int>(keys.size()) - 1;
    };
    Structure work(sig, sizes, bounds.int_window);
    uint64_t examined = 0;
    initial.run(
        work,
        [&](const Structure& s, std::span<const int64_t>) {
          add(s, Node{});
          return bad < 0;
        },
        bounds.ceiling, examined);
    for (size_t i = 0; i < keys.size() && bad < 0; ++i) {
      Structure pre = decode_key(sig, keys[i], bounds.int_window);
      stepper.successors(pre, [&](size_t t, std::span<const int64_t> args, const Structure& post) {
        add(post, Node{static_cast<int>(i), static_cast<int>(t), {args.begin(), args.end()}});
        return bad < 0;
      });
    }
    result.states += keys.size();
    result.window_relative |= stepper.window_relative() || initial.window_relative() || safe.window_relative();
    if (bad < 0) continue;
    Trace trace;
    for (int at = bad; at >= 0; at = nodes[at].parent) {
      TraceStep step{"", {}, decode_key(sig, keys[at], bounds.int_window)};
      if (nodes[at].transition >= 0) {
        const TransitionDef& t = stepper.transition(nodes[at].transition);
        step.transition = t.name;
        for (size_t a = 0; a < t.params.size(); ++a) step.args.emplace_back(t.params[a], nodes[at].args[a]);
      }
      trace.steps.push_back(std::move(step));
    }
    std::reverse(trace.steps.begin(), trace.steps.end());
    if (!result.trace || trace.steps.size() < result.trace->steps.size()) result.trace = std::move(trace);
    result.safe = false;
  }
  return result;
}

std::string render_trace(const Trace& trace) {
  std::ostringstream os;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& st = trace.steps[i];
    if (st.transition.empty()) {
      os << "state " << i << " (initial)\n";
    } else {
      os << "state " << i << " after " << st.transition << "(";
      for (size_t a = 0; a < st.args.size(); ++a)
        os << (a ? ", " : "") << st.args[a].first.name << " = " << st.args[a].second;
      os << ")\n";
    }
    os << describe(st.state);
    if (os.str().back() != '\n') os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Direct simulation check

bool SimulationReport::strong_holds() const {
  return std::all_of(strong.begin(), strong.end(), [](const SimulationItem& i) { return i.holds; });
}

bool SimulationReport::weak_holds() const {
  return std::all_of(weak.begin(), weak.end(), [](const SimulationItem& i) { return i.holds; });
}

SimulationReport check_strong_simulation(const StageContext& ctx, const HighLowUpdate& update, int64_t k,
                                         const SizeBounds& bounds, uint64_t max_states) {
  check_window(bounds.int_window);
  const Vocabulary& vocab = ctx.vocab;
  Stepper stepper(vocab, ctx.gamma, ctx.transitions, bounds.ceiling);
  const SignaturePtr& sig = stepper.plain();
  const int cut = sig->sort_index(update.sort);
  const Variable z = update.z();
  const TagMap to_plain{{Tag::High, Tag::Plain}};

  Compiled theta(*sig, retag(update.theta(), to_plain), {z});
  Compiled iota(*sig, ctx.iota, {});
  Compiled safe(*sig, ctx.safety, {});
  Compiled gamma(*sig, mk_and(ctx.gamma), {});
  struct Upd {
    std::optional<Compiled> formula;
    std::optional<Compiled> term;
  };
  std::vector<Upd> upd(sig->slot_count());
  for (size_t s = 0; s < sig->slot_count(); ++s) {
    const SlotInfo& info = sig->info(static_cast<int>(s));
    if (info.relation) {
      const auto& u = update.relations.at(info.symbol);
      std::vector<Variable> ps{z};
      ps.insert(ps.end(), u.params.begin(), u.params.end());
      upd[s].formula.emplace(*sig, retag(u.formula, to_plain), ps);
    } else {
      const auto& u = update.functions.at(info.symbol);
      std::vector<Variable> ps{z};
      ps.insert(ps.end(), u.params.begin(), u.params.end());
      upd[s].term.emplace(*sig, retag(u.term, to_plain), ps);
    }
  }

  // Universe: every state satisfying Gamma within bounds.
  std::vector<std::string> keys;
  std::unordered_map<std::string, int> index;
  Search universe(sig, {}, ctx.gamma);
  uint64_t examined = 0;
  for (const auto& sizes : size_combinations(vocab, bounds)) {
    Structure work(sig, sizes, bounds.int_window);
    universe.run(
        work,
        [&](const Structure& s, std::span<const int64_t>) {
          if (keys.size() >= max_states)
            throw GuardrailExceeded("simulation universe exceeded " + std::to_string(max_states) + " states");
          std::string key = state_key(s);
          index.emplace(key, static_cast<int>(keys.size()));
          keys.push_back(std::move(key));
          return true;
        },
        bounds.ceiling, examined);
  }

  const size_t n = keys.size();
  std::vector<std::vector<int>> succ(n);
  std::vector<char> is_init(n), is_bad(n);
  struct Pair {
    int64_t d0;
    int low;
  };
  std::vector<std::vector<Pair>> pairs(n);
  SimulationReport rep;
  rep.states = n;

  for (size_t i = 0; i < n; ++i) {
    Structure h = decode_key(sig, keys[i], bounds.int_window);
    is_init[i] = iota.holds(h, {});
    is_bad[i] = !safe.holds(h, {});
    stepper.successors(h, [&](size_t, std::span<const int64_t>, const Structure& post) {
      auto it = index.find(state_key(post));
      if (it == index.end()) throw IllFormed("a successor state lies outside the simulation universe");
      succ[i].push_back(it->second);
      return true;
    });
    std::sort(succ[i].begin(), succ[i].end());
    succ[i].erase(std::unique(succ[i].begin(), succ[i].end()), succ[i].end());

    for (int64_t d0 = 0; d0 < h.size(cut); ++d0) {
      int64_t zv[1] = {d0};
      if (!theta.holds(h, zv)) continue;
      Structure full(sig, h.sizes(), bounds.int_window);
      std::vector<int64_t> frame;
      for (size_t s = 0; s < sig->slot_count(); ++s) {
        Table& t = full.table(static_cast<int>(s));
        std::vector<int64_t> tuple(t.dims.size(), 0);
        do {
          frame.assign(1, d0);
          frame.insert(frame.end(), tuple.begin(), tuple.end());
          t.data[t.offset(tuple)] = upd[s].formula ? upd[s].formula->holds(h, frame) : upd[s].term->value(h, frame);
        } while (next_tuple(tuple, t.dims));
      }
      std::optional<Substructure> sub;
      try {
        sub = substructure(full, update.sort, d0);
      } catch (const DomainCollapse&) {
        continue;
      }
      if (!sub || !gamma.holds(sub->structure, {})) continue;
      auto it = index.find(state_key(sub->structure));
      if (it == index.end()) continue;  // outside the bounded universe
      pairs[i].push_back(Pair{d0, it->second});
      ++rep.pairs;
    }
  }

  auto witness = [&](size_t hi, int64_t d0, const std::string& what) {
    std::ostringstream os;
    os << what << "; high state (d0 = " << d0 << "):\n" << describe(decode_key(sig, keys[hi], bounds.int_window));
    return os.str();
  };
  auto fail = [&](SimulationItem& item, std::string w) {
    if (item.holds) item.witness = std::move(w);
    item.holds = false;
  };
  auto pair_at = [&](size_t h, int64_t d0) -> const Pair* {
    for (const auto& p : pairs[h])
      if (p.d0 == d0) return &p;
    return nullptr;
  };
  auto sizes_of = [&](int idx) { return static_cast<int64_t>(static_cast<signed char>(keys[idx][cut])); };
  auto reaches = [&](int from, int to) {
    if (from == to || std::binary_search(succ[from].begin(), succ[from].end(), to)) return true;
    std::vector<char> seen(n, 0);
    std::deque<int> q{from};
    seen[from] = 1;
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (int y : succ[x]) {
        if (y == to) return true;
        if (!seen[y]) {
          seen[y] = 1;
          q.push_back(y);
        }
      }
    }
    return false;
  };

  auto item = [](const char* name) {
    SimulationItem i;
    i.name = name;
    return i;
  };
  SimulationItem size = item("size-reduction"), sinit = item("strong-initiation"), ssim = item("strong-simulation"),
                 fault = item("fault-preservation"), total = item("inductive-totality");
  SimulationItem winit = item("initiation"), wsim = item("simulation");
  for (size_t h = 0; h < n; ++h) {
    for (const auto& p : pairs[h]) {
      ++size.checked;
      if (sizes_of(p.low) >= sizes_of(static_cast<int>(h))) fail(size, witness(h, p.d0, "low state is not smaller"));
      if (is_init[h]) {
        ++sinit.checked;
        if (!is_init[p.low]) fail(sinit, witness(h, p.d0, "low state is not initial"));
      }
      if (is_bad[h]) {
        ++fault.checked;
        if (!is_bad[p.low]) fail(fault, witness(h, p.d0, "low state satisfies safety"));
      }
    }
    if (is_init[h] && sizes_of(static_cast<int>(h)) > k) {
      ++total.checked;
      ++winit.checked;
      if (pairs[h].empty()) fail(total, witness(h, -1, "large initial state has no simulating state"));
      bool any = std::any_of(pairs[h].begin(), pairs[h].end(), [&](const Pair& p) { return is_init[p.low] != 0; });
      if (!any) fail(winit, witness(h, -1, "large initial state has no initial simulating state"));
    }
    for (int h2 : succ[h]) {
      for (const auto& p : pairs[h]) {
        const Pair* q = pair_at(h2, p.d0);
        ++total.checked;
        ++wsim.checked;
        if (!q) {
          fail(total, witness(h, p.d0, "simulation lost across a step"));
          fail(wsim, witness(h, p.d0, "no simulating successor"));
          continue;
        }
        ++ssim.checked;
        bool step = q->low == p.low || std::binary_search(succ[p.low].begin(), succ[p.low].end(), q->low);
        if (!step) fail(ssim, witness(h, p.d0, "low states are not related by a step"));
        if (!step && !reaches(p.low, q->low)) fail(wsim, witness(h, p.d0, "low successor is unreachable"));
      }
    }
  }
  rep.strong = {size, sinit, ssim, fault, total};
  SimulationItem wsize = size, wfault = fault;
  rep.weak = {wsize, winit, wsim, wfault};
  return rep;
}

}  // namespace cutoff
