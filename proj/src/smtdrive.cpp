#include "cutoff/smtdrive.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "cutoff/sexpr.hpp"

namespace cutoff {

SolverConfig solver_from(const std::optional<std::string>& flag, int timeout_ms) {
  SolverConfig c;
  c.timeout_ms = timeout_ms;
  std::string spec;
  if (flag && !flag->empty()) {
    spec = *flag;
  } else if (const char* env = std::getenv(kSolverEnv); env && *env) {
    spec = env;
  }
  if (spec.empty()) return c;
  std::istringstream in(spec);
  c.command.clear();
  for (std::string w; in >> w;) c.command.push_back(w);
  if (c.command.size() == 1) {
    const std::string& exe = c.command[0];
    std::string base = exe.substr(exe.find_last_of('/') == std::string::npos ? 0 : exe.find_last_of('/') + 1);
    if (base == "z3") c.command.push_back("-in");
  }
  return c;
}

std::string mangle(const std::string& symbol, Tag tag, bool rigid) {
  switch (collapse_tag(tag, rigid)) {
    case Tag::Plain: return symbol + "__s";
    case Tag::Primed: return symbol + "__p";
    case Tag::High: return symbol + "__h";
    case Tag::Low: return symbol + "__l";
    case Tag::HighPrimed: return symbol + "__hp";
    case Tag::LowPrimed: return symbol + "__lp";
  }
  return symbol;
}

std::string mangle_param(const std::string& name) { return name + "__v"; }

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Valid: return "valid";
    case Verdict::Invalid: return "invalid";
    case Verdict::Unknown: return "unknown";
    case Verdict::Timeout: return "timeout";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Emission

const std::set<std::string> kReserved{"and", "or", "not", "xor", "ite", "let", "forall", "exists", "true", "false",
                                      "distinct", "as", "par", "Int", "Bool", "Real", "String", "Array"};

std::string smt_sort(const Vocabulary& vocab, const std::string& sort) {
  const Sort& s = vocab.sort(sort);
  if (s.kind == SortKind::Integer) return "Int";
  if (kReserved.count(sort)) throw Diagnostic("sort name '" + sort + "' is reserved in SMT-LIB");
  return sort;
}

std::string bound_name(const std::string& name) {
  if (kReserved.count(name)) return "|" + name + "|";
  return name;
}

class Printer {
 public:
  Printer(const Vocabulary& vocab, const std::vector<Variable>& params)
      : vocab_(vocab), params_(params.begin(), params.end()) {}

  void term(std::ostream& os, const TermPtr& t) {
    switch (t->kind) {
      case Term::Kind::Var:
        os << var(t->var);
        return;
      case Term::Kind::Int:
        if (t->value < 0)
          os << "(- " << -t->value << ")";
        else
          os << t->value;
        return;
      case Term::Kind::Add:
      case Term::Kind::Sub:
        os << (t->kind == Term::Kind::Add ? "(+ " : "(- ");
        term(os, t->args[0]);
        os << ' ';
        term(os, t->args[1]);
        os << ')';
        return;
      case Term::Kind::Ite:
        os << "(ite ";
        formula(os, t->cond);
        os << ' ';
        term(os, t->args[0]);
        os << ' ';
        term(os, t->args[1]);
        os << ')';
        return;
      case Term::Kind::App:
        app(os, mangle(t->symbol, t->tag, t->rigid), t->args);
        return;
    }
  }

  void formula(std::ostream& os, const FormulaPtr& f) {
    using K = Formula::Kind;
    switch (f->kind) {
      case K::True: os << "true"; return;
      case K::False: os << "false"; return;
      case K::Eq: binary(os, "=", f->terms[0], f->terms[1]); return;
      case K::Less: binary(os, "<", f->terms[0], f->terms[1]); return;
      case K::LessEq: binary(os, "<=", f->terms[0], f->terms[1]); return;
      case K::Pred: app(os, mangle(f->symbol, f->tag, f->rigid), f->terms); return;
      case K::Not:
        os << "(not ";
        formula(os, f->subs[0]);
        os << ')';
        return;
      case K::And:
      case K::Or:
        if (f->subs.empty()) {
          os << (f->kind == K::And ? "true" : "false");
          return;
        }
        if (f->subs.size() == 1) {
          formula(os, f->subs[0]);
          return;
        }
        os << (f->kind == K::And ? "(and" : "(or");
        for (const auto& s : f->subs) {
          os << ' ';
          formula(os, s);
        }
        os << ')';
        return;
      case K::Implies:
      case K::Iff:
        os << (f->kind == K::Implies ? "(=> " : "(= ");
        formula(os, f->subs[0]);
        os << ' ';
        formula(os, f->subs[1]);
        os << ')';
        return;
      case K::Forall:
      case K::Exists: {
        std::vector<Variable> vs;
        std::set<std::string> names;
        FormulaPtr body = f;
        while (body->kind == f->kind && !names.count(body->bound.name)) {
          vs.push_back(body->bound);
          names.insert(body->bound.name);
          body = body->subs[0];
        }
        os << (f->kind == K::Forall ? "(forall (" : "(exists (");
        for (size_t i = 0; i < vs.size(); ++i)
          os << (i ? " " : "") << '(' << bound_name(vs[i].name) << ' ' << smt_sort(vocab_, vs[i].sort) << ')';
        os << ") ";
        for (const auto& v : vs) bound_[v]++;
        formula(os, body);
        for (const auto& v : vs)
          if (--bound_[v] == 0) bound_.erase(v);
        os << ')';
        return;
      }
    }
  }

 private:
  std::string var(const Variable& v) {
    if (bound_.count(v)) return bound_name(v.name);
    if (params_.count(v)) return mangle_param(v.name);
    throw IllFormed("free variable '" + v.name + "' in a verification condition");
  }

  void app(std::ostream& os, const std::string& name, const std::vector<TermPtr>& args) {
    if (args.empty()) {
      os << name;
      return;
    }
    os << '(' << name;
    for (const auto& a : args) {
      os << ' ';
      term(os, a);
    }
    os << ')';
  }

  void binary(std::ostream& os, const char* op, const TermPtr& a, const TermPtr& b) {
    os << '(' << op << ' ';
    term(os, a);
    os << ' ';
    term(os, b);
    os << ')';
  }

  const Vocabulary& vocab_;
  std::set<Variable> params_;
  std::map<Variable, int> bound_;
};

// ---------------------------------------------------------------------------
// Solver process

using Clock = std::chrono::steady_clock;

struct Timeout {};

class Process {
 public:
  explicit Process(const std::vector<std::string>& command) {
    static std::once_flag once;
    std::call_once(once, [] { signal(SIGPIPE, SIG_IGN); });
    int in[2], out[2], err[2];
    if (pipe2(in, O_CLOEXEC) || pipe2(out, O_CLOEXEC) || pipe2(err, O_CLOEXEC))
      throw InfrastructureError(std::string("pipe: ") + std::strerror(errno));
    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_ = fork();
    if (pid_ < 0) throw InfrastructureError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(in[0], 0);
      dup2(out[1], 1);
      dup2(out[1], 2);
      execvp(argv[0], argv.data());
      int e = errno;
      ssize_t ignored = write(err[1], &e, sizeof e);
      (void)ignored;
      _exit(127);
    }
    close(in[0]);
    close(out[1]);
    close(err[1]);
    int e = 0;
    ssize_t n;
    do n = read(err[0], &e, sizeof e);
    while (n < 0 && errno == EINTR);
    close(err[0]);
    to_ = in[1];
    from_ = out[0];
    if (n == sizeof e) {
      reap();
      throw InfrastructureError("cannot run solver '" + command[0] + "': " + std::strerror(e));
    }
  }

  ~Process() {
    if (to_ >= 0) close(to_);
    if (from_ >= 0) close(from_);
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      reap();
    }
  }

  void send(const std::string& text) {
    size_t off = 0;
    while (off < text.size()) {
      ssize_t n = write(to_, text.data() + off, text.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw InfrastructureError("solver closed its input: " + std::string(std::strerror(errno)));
      }
      off += static_cast<size_t>(n);
    }
  }

  // Next complete response; throws Timeout past the deadline.
  std::string receive(Clock::time_point deadline) {
    for (;;) {
      if (size_t n = complete_prefix(buffer_)) {
        std::string r = buffer_.substr(0, n);
        buffer_.erase(0, n);
        return r;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) throw Timeout{};
      pollfd p{from_, POLLIN, 0};
      int rc = poll(&p, 1, static_cast<int>(left));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) throw Timeout{};
      char chunk[65536];
      ssize_t n = read(from_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        // A final atom may lack its trailing newline.
        std::string rest = buffer_;
        buffer_.clear();
        size_t b = rest.find_first_not_of(" \t\r\n");
        if (b != std::string::npos && rest[b] != '(') return rest.substr(b);
        throw InfrastructureError("solver exited unexpectedly" + (rest.empty() ? std::string() : ": " + rest));
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  void finish() {
    try {
      send("(exit)\n");
    } catch (const InfrastructureError&) {
    }
    close(to_);
    to_ = -1;
  }

 private:
  void reap() {
    int status;
    while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }

  pid_t pid_ = -1;
  int to_ = -1;
  int from_ = -1;
  std::string buffer_;
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// Model evaluation

struct ModelFn {
  std::vector<std::string> params;
  const SExpr* body = nullptr;
};

class ModelEval {
 public:
  explicit ModelEval(const std::vector<SExpr>& top) {
    const std::vector<SExpr>* items = &top;
    if (top.size() == 1 && top[0].is_list) items = &top[0].items;
    for (const auto& e : *items) {
      collect_elements(e);
      if (!e.is_list || e.items.size() < 4 || !e.items[0].is_atom("define-fun")) continue;
      ModelFn fn;
      for (const auto& p : e.items[2].items)
        if (p.is_list && !p.items.empty()) fn.params.push_back(p.items[0].atom);
      fn.body = &e.items.back();
      fns_[e.items[1].atom] = fn;
    }
    for (auto& [sort, ids] : raw_elements_) {
      int64_t i = 0;
      for (const auto& [n, name] : ids) element_index_[name] = i++;
      sizes_[sort] = i;
    }
  }

  bool has(const std::string& fn) const { return fns_.count(fn) > 0; }
  int64_t size(const std::string& sort) const {
    auto it = sizes_.find(sort);
    return it == sizes_.end() ? 0 : it->second;
  }

  int64_t call(const std::string& fn, const std::vector<int64_t>& args) {
    const ModelFn& f = fns_.at(fn);
    if (f.params.size() != args.size()) throw InfrastructureError("model arity mismatch for " + fn);
    std::map<std::string, int64_t> env;
    for (size_t i = 0; i < args.size(); ++i) env[f.params[i]] = args[i];
    if (++depth_ > 200) throw InfrastructureError("model definitions nest too deeply");
    int64_t v = eval(*f.body, env);
    --depth_;
    return v;
  }

 private:
  void collect_elements(const SExpr& e) {
    if (e.is_list) {
      for (const auto& i : e.items) collect_elements(i);
      return;
    }
    size_t p = e.atom.find("!val!");
    if (p == std::string::npos || p == 0) return;
    std::string sort = e.atom.substr(0, p);
    std::string num = e.atom.substr(p + 5);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) return;
    raw_elements_[sort][std::stoll(num)] = e.atom;
  }

  int64_t eval(const SExpr& e, std::map<std::string, int64_t>& env) {
    if (!e.is_list) {
      const std::string& a = e.atom;
      if (a == "true") return 1;
      if (a == "false") return 0;
      if (auto it = env.find(a); it != env.end()) return it->second;
      if (!a.empty() && a.find_first_not_of("0123456789") == std::string::npos) return std::stoll(a);
      if (auto it = element_index_.find(a); it != element_index_.end()) return it->second;
      if (fns_.count(a)) return call(a, {});
      throw InfrastructureError("model refers to unknown name '" + a + "'");
    }
    if (e.items.empty()) throw InfrastructureError("empty expression in model");
    const SExpr& head = e.items[0];
    if (head.is_list) {
      // (_ as-array f) and indexed identifiers are not produced for our queries.
      throw InfrastructureError("unsupported model expression " + e.str());
    }
    const std::string& op = head.atom;
    auto arg = [&](size_t i) { return eval(e.items.at(i), env); };
    size_t n = e.items.size() - 1;
    if (op == "let") {
      std::map<std::string, int64_t> inner = env;
      for (const auto& b : e.items.at(1).items) inner[b.items.at(0).atom] = eval(b.items.at(1), env);
      return eval(e.items.at(2), inner);
    }
    if (op == "ite") return arg(1) ? arg(2) : arg(3);
    if (op == "not") return !arg(1);
    if (op == "and") {
      for (size_t i = 1; i <= n; ++i)
        if (!arg(i)) return 0;
      return 1;
    }
    if (op == "or") {
      for (size_t i = 1; i <= n; ++i)
        if (arg(i)) return 1;
      return 0;
    }
    if (op == "xor") {
      int64_t v = 0;
      for (size_t i = 1; i <= n; ++i) v ^= arg(i) ? 1 : 0;
      return v;
    }
    if (op == "=>") return !arg(1) || arg(2);
    if (op == "=") {
      int64_t first = arg(1);
      for (size_t i = 2; i <= n; ++i)
        if (arg(i) != first) return 0;
      return 1;
    }
    if (op == "distinct") {
      std::set<int64_t> seen;
      for (size_t i = 1; i <= n; ++i)
        if (!seen.insert(arg(i)).second) return 0;
      return 1;
    }
    if (op == "+") {
      int64_t v = 0;
      for (size_t i = 1; i <= n; ++i) v += arg(i);
      return v;
    }
    if (op == "-") {
      if (n == 1) return -arg(1);
      int64_t v = arg(1);
      for (size_t i = 2; i <= n; ++i) v -= arg(i);
      return v;
    }
    if (op == "*") {
      int64_t v = 1;
      for (size_t i = 1; i <= n; ++i) v *= arg(i);
      return v;
    }
    if (op == "<") return arg(1) < arg(2);
    if (op == "<=") return arg(1) <= arg(2);
    if (op == ">") return arg(1) > arg(2);
    if (op == ">=") return arg(1) >= arg(2);
    if (op == "as") return arg(1);
    if (fns_.count(op)) {
      std::vector<int64_t> args;
      for (size_t i = 1; i <= n; ++i) args.push_back(arg(i));
      return call(op, args);
    }
    throw InfrastructureError("unsupported model operator '" + op + "'");
  }

  std::map<std::string, ModelFn> fns_;
  std::map<std::string, std::map<int64_t, std::string>> raw_elements_;
  std::map<std::string, int64_t> element_index_;
  std::map<std::string, int64_t> sizes_;
  int depth_ = 0;
};

}  // namespace

std::string emit_query(const VerificationCondition& vc) {
  const Vocabulary& vocab = vc.vocab;
  std::ostringstream os;
  os << "; " << vc.id << "\n";
  os << "(set-option :produce-models true)\n";
  for (const auto& s : vocab.sorts())
    if (s.kind != SortKind::Integer) os << "(declare-sort " << smt_sort(vocab, s.name) << " 0)\n";

  std::set<SymbolRef> used;
  for (const auto& h : vc.hypotheses)
    for (const auto& r : symbols_of(h)) used.insert(r);
  for (const auto& r : symbols_of(vc.conclusion)) used.insert(r);
  std::set<std::string> declared;
  static const Tag kTags[] = {Tag::Plain, Tag::Primed, Tag::High, Tag::Low, Tag::HighPrimed, Tag::LowPrimed};
  for (const auto& d : vocab.symbols()) {
    for (Tag tag : kTags) {
      if (!used.count(SymbolRef{d.name, tag})) continue;
      std::string name = mangle(d.name, tag, !d.is_mutable);
      if (!declared.insert(name).second) continue;
      os << "(declare-fun " << name << " (";
      for (size_t i = 0; i < d.args.size(); ++i) os << (i ? " " : "") << smt_sort(vocab, d.args[i]);
      os << ") " << (d.is_relation() ? "Bool" : smt_sort(vocab, d.result)) << ")\n";
    }
  }
  for (const auto& r : used)
    if (!vocab.find_symbol(r.name)) throw IllFormed("symbol '" + r.name + "' is not declared");
  for (const auto& p : vc.params) os << "(declare-fun " << mangle_param(p.name) << " () " << smt_sort(vocab, p.sort) << ")\n";

  Printer pr(vocab, vc.params);
  for (const auto& h : vc.hypotheses) {
    os << "(assert ";
    pr.formula(os, h);
    os << ")\n";
  }
  os << "(assert (not ";
  pr.formula(os, vc.conclusion);
  os << "))\n";
  os << "(check-sat)\n";
  return os.str();
}

CounterModel decode_model(const std::string& model_text, const VerificationCondition& vc) {
  std::vector<SExpr> top = parse_sexprs(model_text);
  if (top.size() == 1 && top[0].is_list && !top[0].items.empty() && top[0].items[0].is_atom("error"))
    throw InfrastructureError("solver error: " + top[0].str());
  ModelEval m(top);

  auto sig = std::make_shared<Signature>(vc.vocab);
  FormulaPtr negated = mk_and(vc.hypothesis(), mk_not(vc.conclusion));
  sig->add_used(negated);
  std::vector<int64_t> sizes;
  for (const auto& s : vc.vocab.sorts()) sizes.push_back(s.kind == SortKind::Integer ? 0 : std::max<int64_t>(1, m.size(s.name)));
  Structure st(sig, sizes);
  for (size_t slot = 0; slot < sig->slot_count(); ++slot) {
    const SlotInfo& info = sig->info(static_cast<int>(slot));
    std::string name = mangle(info.symbol, info.tag, info.rigid);
    if (!m.has(name)) continue;  // solver left it unconstrained; table stays at the default
    std::vector<int64_t> dims;
    for (int a : info.arg_sorts) dims.push_back(sizes[a]);
    std::vector<int64_t> tuple(dims.size(), 0);
    do {
      int64_t v = m.call(name, tuple);
      if (!info.relation && !sig->is_int_sort(info.result_sort) && (v < 0 || v >= sizes[info.result_sort]))
        throw DecodeIntegrityError("model value of " + name + " lies outside its domain");
      st.set(static_cast<int>(slot), tuple, info.relation ? (v ? 1 : 0) : v);
    } while (next_tuple(tuple, dims));
  }

  CounterModel cm{st, {}, true};
  std::vector<int64_t> values;
  for (const auto& p : vc.params) {
    std::string name = mangle_param(p.name);
    int64_t v = m.has(name) ? m.call(name, {}) : 0;
    cm.params[p] = v;
    values.push_back(v);
  }
  Compiled check(*sig, negated, vc.params);
  if (!check.holds(cm.structure, values)) {
    if (check.window_relative())
      cm.verified = false;
    else
      throw DecodeIntegrityError("countermodel for " + vc.id + " does not falsify the condition");
  }
  return cm;
}

std::string render_model(const CounterModel& model) {
  std::ostringstream os;
  if (!model.params.empty()) {
    os << "params:";
    bool first = true;
    for (const auto& [v, val] : model.params) {
      os << (first ? " " : ", ") << v.name << " = " << val;
      first = false;
    }
    os << "\n";
  }
  const auto& sig = model.structure.signature();
  struct View {
    const char* title;
    Tag tag;
  };
  static const View kViews[] = {{"state", Tag::Plain},         {"post-state", Tag::Primed},
                                {"high pre-state", Tag::High}, {"high post-state", Tag::HighPrimed},
                                {"low pre-state", Tag::Low},   {"low post-state", Tag::LowPrimed}};
  bool domains = false;
  for (const auto& view : kViews) {
    bool any = false;
    for (size_t s = 0; s < sig.slot_count(); ++s) any |= sig.info(static_cast<int>(s)).tag == view.tag;
    if (!any) continue;
    std::string text = describe(model.structure, {view.tag});
    size_t nl = text.find('\n');
    if (!domains) {
      os << text.substr(0, nl + 1);
      domains = true;
    }
    os << "-- " << view.title << "\n" << (nl == std::string::npos ? "" : text.substr(nl + 1));
    if (!text.empty() && text.back() != '\n') os << "\n";
  }
  if (!model.verified) os << "(re-check relative to the integer window)\n";
  return os.str();
}

SolverResult check(const VerificationCondition& vc, const SolverConfig& config) {
  const std::string query = emit_query(vc);
  auto start = Clock::now();
  auto deadline = start + std::chrono::milliseconds(config.timeout_ms);
  SolverResult r;
  Process p(config.command);
  try {
    p.send(query);
    std::string answer = trim(p.receive(deadline));
    if (answer == "unsat") {
      r.verdict = Verdict::Valid;
    } else if (answer == "sat") {
      r.verdict = Verdict::Invalid;
      p.send("(get-model)\n");
      std::string model = p.receive(deadline);
      r.model = decode_model(model, vc);
    } else if (answer == "unknown") {
      r.verdict = Verdict::Unknown;
      p.send("(get-info :reason-unknown)\n");
      auto info = parse_sexprs(p.receive(deadline));
      r.reason = info.empty() ? "unknown" : info[0].str();
    } else {
      throw InfrastructureError("unexpected solver response for " + vc.id + ": " + answer.substr(0, 400));
    }
  } catch (const Timeout&) {
    r.verdict = Verdict::Timeout;
    r.reason = "timeout after " + std::to_string(config.timeout_ms) + " ms";
  }
  p.finish();
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::string solver_version(const SolverConfig& config) {
  try {
    Process p(config.command);
    p.send("(get-info :version)\n");
    auto e = parse_sexprs(p.receive(Clock::now() + std::chrono::seconds(5)));
    p.finish();
    if (e.empty() || !e[0].is_list || e[0].items.size() < 2) return "";
    std::string v = e[0].items[1].atom;
    if (v.size() >= 2 && v.front() == '"') v = v.substr(1, v.size() - 2);
    return v;
  } catch (const std::exception&) {
    return "";
  }
}

}  // namespace cutoff
