#include "cutoff/structure.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

namespace cutoff {

namespace {
constexpr size_t kMaxArity = 8;

std::string tagged_name(const std::string& symbol, Tag tag) {
  switch (tag) {
    case Tag::Plain: return symbol;
    case Tag::Primed: return symbol + "'";
    case Tag::High: return symbol + "@h";
    case Tag::Low: return symbol + "@l";
    case Tag::HighPrimed: return symbol + "@h'";
    case Tag::LowPrimed: return symbol + "@l'";
  }
  return symbol;
}
}  // namespace

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(Vocabulary vocab) : vocab_(std::move(vocab)) {
  for (size_t i = 0; i < vocab_.sorts().size(); ++i) sort_index_[vocab_.sorts()[i].name] = static_cast<int>(i);
}

int Signature::sort_index(const std::string& name) const {
  auto it = sort_index_.find(name);
  if (it == sort_index_.end()) throw IllFormed("unknown sort '" + name + "'");
  return it->second;
}

int Signature::add_slot(const std::string& symbol, Tag tag) {
  const auto& d = vocab_.symbol(symbol);
  Tag t = collapse_tag(tag, !d.is_mutable);
  SymbolRef key{symbol, t};
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  if (d.args.size() > kMaxArity) throw IllFormed("symbol '" + symbol + "' exceeds the supported arity");
  SlotInfo info;
  info.symbol = symbol;
  info.tag = t;
  info.relation = d.is_relation();
  info.rigid = !d.is_mutable;
  for (const auto& a : d.args) {
    int si = sort_index(a);
    if (is_int_sort(si)) throw IllFormed("symbol '" + symbol + "' takes an integer argument and cannot be tabulated");
    info.arg_sorts.push_back(si);
  }
  info.result_sort = d.is_relation() ? -1 : sort_index(d.result);
  int slot = static_cast<int>(slots_.size());
  slots_.push_back(std::move(info));
  index_[key] = slot;
  return slot;
}

void Signature::add_all(const std::vector<Tag>& tags) {
  for (Tag tag : tags)
    for (const auto& d : vocab_.symbols()) add_slot(d.name, tag);
}

void Signature::add_used(const FormulaPtr& f) {
  for (const auto& ref : symbols_of(f)) add_slot(ref.name, ref.tag);
}

int Signature::find_slot(const std::string& symbol, Tag tag) const {
  const auto* d = vocab_.find_symbol(symbol);
  if (!d) return -1;
  auto it = index_.find({symbol, collapse_tag(tag, !d->is_mutable)});
  return it == index_.end() ? -1 : it->second;
}

int Signature::slot(const std::string& symbol, Tag tag) const {
  int s = find_slot(symbol, tag);
  if (s < 0) throw IllFormed("structure does not interpret " + tagged_name(symbol, tag));
  return s;
}

// ---------------------------------------------------------------------------
// Structure

size_t Table::offset(std::span<const int64_t> args) const {
  size_t off = 0;
  for (size_t i = 0; i < dims.size(); ++i) off = off * dims[i] + static_cast<size_t>(args[i]);
  return off;
}

Structure::Structure(SignaturePtr sig, std::vector<int64_t> sizes, int64_t int_window)
    : sig_(std::move(sig)), sizes_(std::move(sizes)), int_window_(int_window) {
  if (sizes_.size() != sig_->sorts().size()) throw IllFormed("structure needs one size per sort");
  for (size_t i = 0; i < sizes_.size(); ++i)
    if (!sig_->is_int_sort(static_cast<int>(i)) && sizes_[i] < 1)
      throw IllFormed("sort '" + sig_->sorts()[i].name + "' needs a nonempty domain");
  tables_.resize(sig_->slot_count());
  for (size_t s = 0; s < tables_.size(); ++s) {
    const auto& info = sig_->info(static_cast<int>(s));
    size_t n = 1;
    for (int a : info.arg_sorts) {
      tables_[s].dims.push_back(sizes_[a]);
      n *= static_cast<size_t>(sizes_[a]);
    }
    tables_[s].data.assign(n, 0);
  }
}

int64_t Structure::get(int slot, std::span<const int64_t> args) const {
  const auto& t = tables_[slot];
  if (args.size() != t.dims.size()) throw IllFormed("wrong number of arguments for " + sig_->info(slot).symbol);
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i] < 0 || args[i] >= t.dims[i]) throw IllFormed("argument outside the domain of " + sig_->info(slot).symbol);
  return t.data[t.offset(args)];
}

void Structure::set(int slot, std::span<const int64_t> args, int64_t value) {
  auto& t = tables_[slot];
  if (args.size() != t.dims.size()) throw IllFormed("wrong number of arguments for " + sig_->info(slot).symbol);
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i] < 0 || args[i] >= t.dims[i]) throw IllFormed("argument outside the domain of " + sig_->info(slot).symbol);
  t.data[t.offset(args)] = value;
}

int64_t Structure::get(const std::string& symbol, Tag tag, std::vector<int64_t> args) const {
  return get(sig_->slot(symbol, tag), args);
}

void Structure::set(const std::string& symbol, Tag tag, std::vector<int64_t> args, int64_t value) {
  set(sig_->slot(symbol, tag), args, value);
}

bool Structure::well_formed() const {
  for (size_t s = 0; s < tables_.size(); ++s) {
    const auto& info = sig_->info(static_cast<int>(s));
    for (int64_t v : tables_[s].data) {
      if (info.relation) {
        if (v != 0 && v != 1) return false;
      } else if (!sig_->is_int_sort(info.result_sort)) {
        if (v < 0 || v >= sizes_[info.result_sort]) return false;
      }
    }
  }
  return true;
}

bool Structure::operator==(const Structure& other) const {
  if (sig_ != other.sig_ || sizes_ != other.sizes_) return false;
  for (size_t s = 0; s < tables_.size(); ++s)
    if (tables_[s].data != other.tables_[s].data) return false;
  return true;
}

bool next_tuple(std::vector<int64_t>& tuple, const std::vector<int64_t>& dims) {
  for (size_t i = dims.size(); i-- > 0;) {
    if (++tuple[i] < dims[i]) return true;
    tuple[i] = 0;
  }
  return false;
}

std::string describe(const Structure& s, const std::vector<Tag>& tags) {
  const auto& sig = s.signature();
  std::ostringstream os;
  bool first_sort = true;
  os << "domains:";
  for (size_t i = 0; i < sig.sorts().size(); ++i) {
    if (sig.is_int_sort(static_cast<int>(i))) continue;
    os << (first_sort ? " " : ", ") << sig.sorts()[i].name << "=" << s.size(static_cast<int>(i));
    first_sort = false;
  }
  os << "\n";
  for (size_t slot = 0; slot < sig.slot_count(); ++slot) {
    const auto& info = sig.info(static_cast<int>(slot));
    if (!tags.empty() && std::find(tags.begin(), tags.end(), info.tag) == tags.end()) continue;
    const auto& t = s.table(static_cast<int>(slot));
    os << "  " << tagged_name(info.symbol, info.tag) << " = ";
    std::vector<int64_t> tuple(t.dims.size(), 0);
    bool any_empty = false;
    for (auto d : t.dims) any_empty |= d == 0;
    if (info.relation) {
      os << "{";
      bool first = true;
      if (!any_empty) {
        do {
          if (!t.data[t.offset(tuple)]) continue;
          os << (first ? "" : ", ") << "(";
          for (size_t i = 0; i < tuple.size(); ++i) os << (i ? "," : "") << tuple[i];
          os << ")";
          first = false;
        } while (next_tuple(tuple, t.dims));
      }
      os << "}";
    } else if (t.dims.empty()) {
      os << t.data[0];
    } else {
      os << "[";
      bool first = true;
      if (!any_empty) {
        do {
          os << (first ? "" : ", ");
          for (size_t i = 0; i < tuple.size(); ++i) os << (i ? "," : "") << tuple[i];
          os << "->" << t.data[t.offset(tuple)];
          first = false;
        } while (next_tuple(tuple, t.dims));
      }
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Compiled evaluation

struct CompileState {
  Compiled& out;
  const Signature& sig;
  std::vector<std::pair<Variable, int>> scope;
  int next_frame = 0;

  int push(Compiled::Node n, const std::vector<int>& kids) {
    n.first = static_cast<int>(out.kids_.size());
    n.count = static_cast<int>(kids.size());
    out.kids_.insert(out.kids_.end(), kids.begin(), kids.end());
    out.nodes_.push_back(n);
    return static_cast<int>(out.nodes_.size() - 1);
  }

  int lookup(const Variable& v) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == v) return it->second;
    throw IllFormed("uncovered free variable '" + v.name + "' of sort '" + v.sort + "'");
  }

  int term(const TermPtr& t) {
    using N = Compiled::Node;
    N n;
    switch (t->kind) {
      case Term::Kind::Var:
        n.op = N::Var;
        n.var = lookup(t->var);
        return push(n, {});
      case Term::Kind::Int:
        n.op = N::Int;
        n.value = t->value;
        return push(n, {});
      case Term::Kind::App: {
        n.op = N::App;
        n.slot = sig.slot(t->symbol, t->tag);
        std::vector<int> kids;
        for (const auto& a : t->args) kids.push_back(term(a));
        return push(n, kids);
      }
      case Term::Kind::Add:
      case Term::Kind::Sub: {
        n.op = t->kind == Term::Kind::Add ? N::Add : N::Sub;
        std::vector<int> kids{term(t->args[0]), term(t->args[1])};
        return push(n, kids);
      }
      case Term::Kind::Ite: {
        n.op = N::Ite;
        std::vector<int> kids{formula(t->cond), term(t->args[0]), term(t->args[1])};
        return push(n, kids);
      }
    }
    throw IllFormed("unknown term kind");
  }

  int formula(const FormulaPtr& f) {
    using N = Compiled::Node;
    N n;
    std::vector<int> kids;
    switch (f->kind) {
      case Formula::Kind::True: n.op = N::True; return push(n, {});
      case Formula::Kind::False: n.op = N::False; return push(n, {});
      case Formula::Kind::Eq:
        if (f->terms[0]->sort != f->terms[1]->sort) throw IllFormed("equality between different sorts");
        n.op = N::Eq;
        break;
      case Formula::Kind::Less: n.op = N::Less; break;
      case Formula::Kind::LessEq: n.op = N::LessEq; break;
      case Formula::Kind::Pred:
        n.op = N::Pred;
        n.slot = sig.slot(f->symbol, f->tag);
        break;
      case Formula::Kind::Not: n.op = N::Not; break;
      case Formula::Kind::And: n.op = N::And; break;
      case Formula::Kind::Or: n.op = N::Or; break;
      case Formula::Kind::Implies: n.op = N::Implies; break;
      case Formula::Kind::Iff: n.op = N::Iff; break;
      case Formula::Kind::Forall:
      case Formula::Kind::Exists: {
        n.op = f->kind == Formula::Kind::Forall ? N::Forall : N::Exists;
        n.sort = sig.sort_index(f->bound.sort);
        if (sig.is_int_sort(n.sort)) out.window_relative_ = true;
        n.var = next_frame++;
        if (next_frame > out.frame_size_) out.frame_size_ = next_frame;
        scope.emplace_back(f->bound, n.var);
        kids.push_back(formula(f->subs[0]));
        scope.pop_back();
        --next_frame;
        return push(n, kids);
      }
    }
    for (const auto& t : f->terms) kids.push_back(term(t));
    for (const auto& s : f->subs) kids.push_back(formula(s));
    return push(n, kids);
  }
};

struct EvalState {
  const Compiled& c;
  const Structure& s;
  int64_t* frame;

  bool holds(int i) {
    using N = Compiled::Node;
    const auto& n = c.nodes_[i];
    const int* k = c.kids_.data() + n.first;
    switch (n.op) {
      case N::True: return true;
      case N::False: return false;
      case N::Eq: return value(k[0]) == value(k[1]);
      case N::Less: return value(k[0]) < value(k[1]);
      case N::LessEq: return value(k[0]) <= value(k[1]);
      case N::Pred: {
        const auto& t = s.table(n.slot);
        size_t off = 0;
        for (int j = 0; j < n.count; ++j) off = off * t.dims[j] + static_cast<size_t>(value(k[j]));
        return t.data[off] != 0;
      }
      case N::Not: return !holds(k[0]);
      case N::And:
        for (int j = 0; j < n.count; ++j)
          if (!holds(k[j])) return false;
        return true;
      case N::Or:
        for (int j = 0; j < n.count; ++j)
          if (holds(k[j])) return true;
        return false;
      case N::Implies: return !holds(k[0]) || holds(k[1]);
      case N::Iff: return holds(k[0]) == holds(k[1]);
      case N::Forall:
      case N::Exists: {
        bool want = n.op == N::Exists;
        int64_t lo = 0, hi = s.size(n.sort) - 1;
        if (s.signature().is_int_sort(n.sort)) lo = -s.int_window(), hi = s.int_window();
        for (int64_t v = lo; v <= hi; ++v) {
          frame[n.var] = v;
          if (holds(k[0]) == want) return want;
        }
        return !want;
      }
      default: break;
    }
    throw IllFormed("term node evaluated as a formula");
  }

  int64_t value(int i) {
    using N = Compiled::Node;
    const auto& n = c.nodes_[i];
    const int* k = c.kids_.data() + n.first;
    switch (n.op) {
      case N::Var: return frame[n.var];
      case N::Int: return n.value;
      case N::App: {
        const auto& t = s.table(n.slot);
        size_t off = 0;
        for (int j = 0; j < n.count; ++j) off = off * t.dims[j] + static_cast<size_t>(value(k[j]));
        return t.data[off];
      }
      case N::Add: return value(k[0]) + value(k[1]);
      case N::Sub: return value(k[0]) - value(k[1]);
      case N::Ite: return holds(k[0]) ? value(k[1]) : value(k[2]);
      default: break;
    }
    throw IllFormed("formula node evaluated as a term");
  }
};

Compiled::Compiled(const Signature& sig, const FormulaPtr& f, const std::vector<Variable>& params) {
  CompileState st{*this, sig, {}, 0};
  for (const auto& p : params) {
    sig.sort_index(p.sort);
    st.scope.emplace_back(p, st.next_frame++);
  }
  frame_size_ = st.next_frame;
  param_count_ = params.size();
  root_ = st.formula(f);
}

Compiled::Compiled(const Signature& sig, const TermPtr& t, const std::vector<Variable>& params) {
  CompileState st{*this, sig, {}, 0};
  for (const auto& p : params) {
    sig.sort_index(p.sort);
    st.scope.emplace_back(p, st.next_frame++);
  }
  frame_size_ = st.next_frame;
  param_count_ = params.size();
  root_ = st.term(t);
}

// Values are int64 with kNone marking an undetermined term.
struct Eval3State {
  using T = Compiled::Truth;
  static constexpr int64_t kNone = std::numeric_limits<int64_t>::min();
  const Compiled& c;
  const Structure& s;
  int64_t* frame;
  const Compiled::Partial& p;

  bool known_cell(int slot, size_t off) const {
    if (p.unknown && (*p.unknown)[slot]) return false;
    return slot != p.slot || off < p.known;
  }

  static T neg(T t) { return t == T::Unknown3 ? t : (t == T::True3 ? T::False3 : T::True3); }

  T holds(int i) {
    using N = Compiled::Node;
    const auto& n = c.nodes_[i];
    const int* k = c.kids_.data() + n.first;
    switch (n.op) {
      case N::True: return T::True3;
      case N::False: return T::False3;
      case N::Eq:
      case N::Less:
      case N::LessEq: {
        int64_t a = value(k[0]), b = value(k[1]);
        if (a == kNone || b == kNone) return T::Unknown3;
        bool r = n.op == N::Eq ? a == b : n.op == N::Less ? a < b : a <= b;
        return r ? T::True3 : T::False3;
      }
      case N::Pred: {
        const auto& t = s.table(n.slot);
        size_t off = 0;
        for (int j = 0; j < n.count; ++j) {
          int64_t v = value(k[j]);
          if (v == kNone) return T::Unknown3;
          off = off * t.dims[j] + static_cast<size_t>(v);
        }
        if (!known_cell(n.slot, off)) return T::Unknown3;
        return t.data[off] != 0 ? T::True3 : T::False3;
      }
      case N::Not: return neg(holds(k[0]));
      case N::And:
      case N::Or: {
        T stop = n.op == N::And ? T::False3 : T::True3;
        bool unknown = false;
        for (int j = 0; j < n.count; ++j) {
          T r = holds(k[j]);
          if (r == stop) return stop;
          unknown |= r == T::Unknown3;
        }
        return unknown ? T::Unknown3 : neg(stop);
      }
      case N::Implies: {
        T a = holds(k[0]);
        if (a == T::False3) return T::True3;
        T b = holds(k[1]);
        if (b == T::True3) return T::True3;
        return a == T::True3 && b == T::False3 ? T::False3 : T::Unknown3;
      }
      case N::Iff: {
        T a = holds(k[0]), b = holds(k[1]);
        if (a == T::Unknown3 || b == T::Unknown3) return T::Unknown3;
        return a == b ? T::True3 : T::False3;
      }
      case N::Forall:
      case N::Exists: {
        T stop = n.op == N::Exists ? T::True3 : T::False3;
        int64_t lo = 0, hi = s.size(n.sort) - 1;
        if (s.signature().is_int_sort(n.sort)) lo = -s.int_window(), hi = s.int_window();
        bool unknown = false;
        for (int64_t v = lo; v <= hi; ++v) {
          frame[n.var] = v;
          T r = holds(k[0]);
          if (r == stop) return stop;
          unknown |= r == T::Unknown3;
        }
        return unknown ? T::Unknown3 : neg(stop);
      }
      default: break;
    }
    throw IllFormed("term node evaluated as a formula");
  }

  int64_t value(int i) {
    using N = Compiled::Node;
    const auto& n = c.nodes_[i];
    const int* k = c.kids_.data() + n.first;
    switch (n.op) {
      case N::Var: return frame[n.var];
      case N::Int: return n.value;
      case N::App: {
        const auto& t = s.table(n.slot);
        size_t off = 0;
        for (int j = 0; j < n.count; ++j) {
          int64_t v = value(k[j]);
          if (v == kNone) return kNone;
          off = off * t.dims[j] + static_cast<size_t>(v);
        }
        return known_cell(n.slot, off) ? t.data[off] : kNone;
      }
      case N::Add:
      case N::Sub: {
        int64_t a = value(k[0]), b = value(k[1]);
        if (a == kNone || b == kNone) return kNone;
        return n.op == N::Add ? a + b : a - b;
      }
      case N::Ite: {
        T cond = holds(k[0]);
        if (cond != T::Unknown3) return value(k[cond == T::True3 ? 1 : 2]);
        int64_t a = value(k[1]), b = value(k[2]);
        return a == b ? a : kNone;
      }
      default: break;
    }
    throw IllFormed("formula node evaluated as a term");
  }
};

Compiled::Truth Compiled::holds3(const Structure& s, std::span<const int64_t> params, const Partial& partial) const {
  int64_t small[64] = {};
  std::vector<int64_t> big;
  int64_t* frame = small;
  if (frame_size_ > 64) {
    big.assign(frame_size_, 0);
    frame = big.data();
  }
  for (size_t i = 0; i < param_count_ && i < params.size(); ++i) frame[i] = params[i];
  Eval3State st{*this, s, frame, partial};
  return st.holds(root_);
}

bool Compiled::holds(const Structure& s, std::span<const int64_t> params) const {
  int64_t small[64] = {};
  std::vector<int64_t> big;
  int64_t* frame = small;
  if (frame_size_ > 64) {
    big.assign(frame_size_, 0);
    frame = big.data();
  }
  for (size_t i = 0; i < param_count_ && i < params.size(); ++i) frame[i] = params[i];
  EvalState st{*this, s, frame};
  return st.holds(root_);
}

int64_t Compiled::value(const Structure& s, std::span<const int64_t> params) const {
  int64_t small[64] = {};
  std::vector<int64_t> big;
  int64_t* frame = small;
  if (frame_size_ > 64) {
    big.assign(frame_size_, 0);
    frame = big.data();
  }
  for (size_t i = 0; i < param_count_ && i < params.size(); ++i) frame[i] = params[i];
  EvalState st{*this, s, frame};
  return st.value(root_);
}

namespace {

std::vector<int64_t> assignment_values(const Structure& s, const Assignment& a, std::vector<Variable>& params) {
  std::vector<int64_t> vals;
  for (const auto& [v, val] : a) {
    int si = s.signature().sort_index(v.sort);
    if (!s.signature().is_int_sort(si) && (val < 0 || val >= s.size(si)))
      throw IllFormed("assignment of '" + v.name + "' lies outside its sort's domain");
    params.push_back(v);
    vals.push_back(val);
  }
  return vals;
}

}  // namespace

bool eval(const Structure& s, const Assignment& assignment, const FormulaPtr& f) {
  std::vector<Variable> params;
  auto vals = assignment_values(s, assignment, params);
  return Compiled(s.signature(), f, params).holds(s, vals);
}

int64_t eval_term(const Structure& s, const Assignment& assignment, const TermPtr& t) {
  std::vector<Variable> params;
  auto vals = assignment_values(s, assignment, params);
  return Compiled(s.signature(), t, params).value(s, vals);
}

// ---------------------------------------------------------------------------
// Substructures

std::optional<Substructure> substructure(const Structure& s, const std::string& sort, int64_t removed) {
  const auto& sig = s.signature();
  int si = sig.sort_index(sort);
  if (sig.is_int_sort(si)) throw IllFormed("cannot remove elements of the integer sort");
  if (removed < 0 || removed >= s.size(si)) throw IllFormed("removed element is not in the domain");
  if (s.size(si) < 2) throw DomainCollapse("removing the only element of sort '" + sort + "'");

  std::vector<int64_t> renumber(s.size(si), -1), kept;
  for (int64_t e = 0; e < s.size(si); ++e)
    if (e != removed) {
      renumber[e] = static_cast<int64_t>(kept.size());
      kept.push_back(e);
    }
  auto sizes = s.sizes();
  sizes[si] -= 1;
  Structure out(s.signature_ptr(), sizes, s.int_window());

  for (size_t slot = 0; slot < sig.slot_count(); ++slot) {
    const auto& info = sig.info(static_cast<int>(slot));
    const auto& src = s.table(static_cast<int>(slot));
    auto& dst = out.table(static_cast<int>(slot));
    bool maps_into = info.result_sort == si;
    std::vector<int64_t> tuple(dst.dims.size(), 0), orig(dst.dims.size(), 0);
    bool empty = false;
    for (auto d : dst.dims) empty |= d == 0;
    if (empty) continue;
    do {
      for (size_t i = 0; i < tuple.size(); ++i) orig[i] = info.arg_sorts[i] == si ? kept[tuple[i]] : tuple[i];
      int64_t v = src.data[src.offset(orig)];
      if (maps_into) {
        if (v == removed) return std::nullopt;
        v = renumber[v];
      }
      dst.data[dst.offset(tuple)] = v;
    } while (next_tuple(tuple, dst.dims));
  }
  return Substructure{std::move(out), std::move(kept)};
}

}  // namespace cutoff
