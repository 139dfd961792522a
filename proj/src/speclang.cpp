#include "cutoff/speclang.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace cutoff {

FormulaPtr TransitionDef::body() const {
  std::vector<FormulaPtr> parts = assumes;
  parts.insert(parts.end(), clauses.begin(), clauses.end());
  return mk_and(parts);
}

const TransitionDef* ProtocolSpec::find_transition(const std::string& name) const {
  for (const auto& t : transitions)
    if (t.name == name) return &t;
  return nullptr;
}

FormulaPtr HighLowUpdate::theta() const {
  FormulaPtr cond = condition ? condition : mk_true();
  if (!invariant) return cond;
  return mk_and(cond, invariant);
}

namespace {

// ---------------------------------------------------------------------------
// Lexing

struct Token {
  enum Kind { Ident, Int, Sym, End } kind = End;
  std::string text;
  int line = 0;
  int col = 0;
};

struct Line {
  int number = 0;
  int indent = 0;
  std::vector<Token> tokens;
};

std::vector<Token> lex_line(const std::string& s, int line) {
  std::vector<Token> out;
  size_t i = 0;
  static const char* two[] = {"<->", "->", "!=", "<=", ">=", ":="};
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = static_cast<int>(i) + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Token::Ident;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      t.kind = Token::Int;
      t.text = s.substr(i, j - i);
      i = j;
    } else {
      t.kind = Token::Sym;
      bool matched = false;
      for (const char* op : two) {
        size_t n = std::char_traits<char>::length(op);
        if (s.compare(i, n, op) == 0) {
          t.text = op;
          i += n;
          matched = true;
          break;
        }
      }
      if (!matched) {
        static const std::string singles = "()[],:.=<>&|!+-@'";
        if (singles.find(c) == std::string::npos)
          throw Diagnostic(std::string("unexpected character '") + c + "'", line, t.col);
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Line> lex(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    size_t first = raw.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    for (size_t k = 0; k < first; ++k)
      if (raw[k] == '\t') throw Diagnostic("tabs are not allowed in indentation", number, static_cast<int>(k) + 1);
    Line l;
    l.number = number;
    l.indent = static_cast<int>(first);
    l.tokens = lex_line(raw, number);
    lines.push_back(std::move(l));
  }
  return lines;
}

// A top-level declaration; transitions also carry their body items.
struct Item {
  std::vector<Token> tokens;
  std::vector<std::vector<Token>> body;
  int line = 0;
};

std::vector<Item> split_items(const std::vector<Line>& lines) {
  std::vector<Item> items;
  int body_indent = -1;
  for (const auto& l : lines) {
    if (l.indent == 0) {
      Item it;
      it.tokens = l.tokens;
      it.line = l.number;
      items.push_back(std::move(it));
      body_indent = -1;
      continue;
    }
    if (items.empty()) throw Diagnostic("indented line outside any declaration", l.number, l.indent + 1);
    auto& cur = items.back();
    bool transition = !cur.tokens.empty() && cur.tokens[0].text == "transition";
    if (!transition) {
      cur.tokens.insert(cur.tokens.end(), l.tokens.begin(), l.tokens.end());
      continue;
    }
    if (body_indent < 0 || l.indent <= body_indent) {
      body_indent = l.indent;
      cur.body.push_back(l.tokens);
    } else {
      cur.body.back().insert(cur.body.back().end(), l.tokens.begin(), l.tokens.end());
    }
  }
  return items;
}

// ---------------------------------------------------------------------------
// Untyped expressions

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Binder {
  std::string name;
  std::string sort;  // empty when inferred
  int line = 0, col = 0;
};

struct Expr {
  enum class K { Ident, Int, Bool, Not, And, Or, Implies, Iff, Cmp, Add, Sub, Ite, Quant };
  K k = K::Bool;
  std::string name;  // identifier, comparison operator, quantifier keyword
  bool primed = false;
  std::optional<Tag> tag;
  bool call = false;
  std::vector<ExprPtr> args;
  int64_t value = 0;
  bool bval = true;
  std::vector<Binder> binders;
  int line = 0, col = 0;
};

const std::set<std::string>& expr_keywords() {
  static const std::set<std::string> k = {"forall", "exists", "true", "false", "if", "then", "else"};
  return k;
}

// Names that would collide with SMT-LIB syntax or theory symbols.
const std::set<std::string>& reserved_names() {
  static const std::set<std::string> r = {
      "forall", "exists", "true",   "false",   "if",     "then",      "else",     "and",     "or",
      "not",    "ite",    "let",    "distinct", "assert", "declare",  "define",   "Int",     "Bool",
      "Real",   "Array",  "select", "store",    "par",    "as",       "match",    "_",       "xor",
      "div",    "mod",    "abs",    "to_real",  "to_int", "is_int",   "String",   "Seq",     "RegLan"};
  return r;
}

class ExprParser {
 public:
  explicit ExprParser(std::vector<Token> toks) : toks_(std::move(toks)) {
    Token end;
    end.kind = Token::End;
    if (!toks_.empty()) {
      end.line = toks_.back().line;
      end.col = toks_.back().col + static_cast<int>(toks_.back().text.size());
    }
    toks_.push_back(end);
  }

  const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::End; }
  bool is(const std::string& text) const { return peek().kind != Token::End && peek().text == text; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(const std::string& text) {
    if (!is(text)) return false;
    next();
    return true;
  }
  const Token& expect(const std::string& text) {
    if (!is(text)) fail("expected '" + text + "'");
    return next();
  }
  const Token& ident(const char* what = "an identifier") {
    if (peek().kind != Token::Ident) fail(std::string("expected ") + what);
    return next();
  }
  int64_t integer() {
    if (peek().kind != Token::Int) fail("expected an integer");
    return std::stoll(next().text);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = peek();
    std::string found = t.kind == Token::End ? "end of line" : "'" + t.text + "'";
    throw Diagnostic(msg + ", found " + found, t.line, t.col);
  }
  void done() {
    if (!at_end()) fail("unexpected trailing input");
  }

  ExprPtr expr() { return quant(); }

 private:
  std::shared_ptr<Expr> node(Expr::K k, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->k = k;
    e->line = at.line;
    e->col = at.col;
    return e;
  }

  ExprPtr quant() {
    if (is("forall") || is("exists")) {
      const Token& q = next();
      auto e = node(Expr::K::Quant, q);
      e->name = q.text;
      do {
        const Token& v = ident("a variable name");
        Binder b{v.text, "", v.line, v.col};
        if (accept(":")) b.sort = ident("a sort name").text;
        e->binders.push_back(b);
      } while (accept(","));
      expect(".");
      e->args.push_back(quant());
      return e;
    }
    return iff();
  }

  ExprPtr iff() {
    ExprPtr lhs = imp();
    while (is("<->")) {
      const Token& op = next();
      auto e = node(Expr::K::Iff, op);
      e->args = {lhs, imp()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr imp() {
    ExprPtr lhs = disj();
    if (is("->")) {
      const Token& op = next();
      auto e = node(Expr::K::Implies, op);
      e->args = {lhs, imp()};
      return e;
    }
    return lhs;
  }

  ExprPtr disj() {
    ExprPtr first = conj();
    if (!is("|")) return first;
    auto e = node(Expr::K::Or, peek());
    e->line = first->line;
    e->col = first->col;
    e->args.push_back(first);
    while (accept("|")) e->args.push_back(conj());
    return e;
  }

  ExprPtr conj() {
    ExprPtr first = unary();
    if (!is("&")) return first;
    auto e = node(Expr::K::And, peek());
    e->line = first->line;
    e->col = first->col;
    e->args.push_back(first);
    while (accept("&")) e->args.push_back(unary());
    return e;
  }

  ExprPtr unary() {
    if (is("!")) {
      const Token& op = next();
      auto e = node(Expr::K::Not, op);
      e->args.push_back(unary());
      return e;
    }
    if (is("forall") || is("exists")) return quant();
    return cmp();
  }

  ExprPtr cmp() {
    ExprPtr lhs = sum();
    static const std::set<std::string> ops = {"=", "!=", "<", "<=", ">", ">="};
    if (peek().kind == Token::Sym && ops.count(peek().text)) {
      const Token& op = next();
      auto e = node(Expr::K::Cmp, op);
      e->name = op.text;
      e->args = {lhs, sum()};
      return e;
    }
    return lhs;
  }

  ExprPtr sum() {
    ExprPtr lhs = neg();
    while (is("+") || is("-")) {
      const Token& op = next();
      auto e = node(op.text == "+" ? Expr::K::Add : Expr::K::Sub, op);
      e->args = {lhs, neg()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr neg() {
    if (is("-")) {
      const Token& op = next();
      if (peek().kind == Token::Int) {
        auto e = node(Expr::K::Int, op);
        e->value = -std::stoll(next().text);
        return e;
      }
      auto zero = node(Expr::K::Int, op);
      zero->value = 0;
      auto e = node(Expr::K::Sub, op);
      e->args = {zero, neg()};
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Token::Int) {
      next();
      auto e = node(Expr::K::Int, t);
      e->value = std::stoll(t.text);
      return e;
    }
    if (accept("(")) {
      ExprPtr inner = quant();
      expect(")");
      return inner;
    }
    if (t.kind != Token::Ident) fail("expected an expression");
    if (t.text == "true" || t.text == "false") {
      next();
      auto e = node(Expr::K::Bool, t);
      e->bval = t.text == "true";
      return e;
    }
    if (t.text == "if") {
      next();
      auto e = node(Expr::K::Ite, t);
      ExprPtr c = quant();
      expect("then");
      ExprPtr a = sum();
      expect("else");
      ExprPtr b = sum();
      e->args = {c, a, b};
      return e;
    }
    if (expr_keywords().count(t.text)) fail("unexpected keyword");
    next();
    auto e = node(Expr::K::Ident, t);
    e->name = t.text;
    if (accept("@")) {
      const Token& tg = ident("a copy tag");
      if (tg.text == "h") e->tag = Tag::High;
      else if (tg.text == "l") e->tag = Tag::Low;
      else throw Diagnostic("unknown copy tag '" + tg.text + "'", tg.line, tg.col);
    }
    if (accept("'")) e->primed = true;
    if (accept("(")) {
      e->call = true;
      if (!is(")")) {
        do e->args.push_back(quant());
        while (accept(","));
      }
      expect(")");
    }
    return e;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Resolution: sort inference then construction

struct Types {
  std::vector<int> parent;
  std::vector<std::string> sort;

  int fresh(const std::string& s = "") {
    parent.push_back(static_cast<int>(parent.size()));
    sort.push_back(s);
    return parent.back();
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unify(int a, int b, const Expr& at) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (!sort[a].empty() && !sort[b].empty() && sort[a] != sort[b])
      throw Diagnostic("sort mismatch: '" + sort[a] + "' versus '" + sort[b] + "'", at.line, at.col);
    if (sort[a].empty()) sort[a] = sort[b];
    parent[b] = a;
  }
  void require(int a, const std::string& s, const Expr& at) { unify(a, fresh(s), at); }
  const std::string& of(int a) { return sort[find(a)]; }
};

enum class Mode { Spec, Stage };

struct ParamSpec {
  std::string name;
  std::string sort;  // empty: infer
  int line = 0, col = 0;
};

bool capitalized(const std::string& s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

void check_user_name(const std::string& name, int line, int col, const char* what) {
  if (name.find("__") != std::string::npos)
    throw Diagnostic(std::string(what) + " '" + name + "' must not contain '__'", line, col);
  if (reserved_names().count(name)) throw Diagnostic(std::string(what) + " '" + name + "' is reserved", line, col);
}

class Resolver {
 public:
  Resolver(const Vocabulary& vocab, const std::map<std::string, Definition>& defs, Mode mode, bool allow_primed,
           bool implicit)
      : vocab_(vocab), defs_(defs), mode_(mode), allow_primed_(allow_primed), implicit_(implicit) {}

  // Resolve a formula (or term when as_term) whose free variables are the
  // given parameters, plus capitalized implicit variables when enabled.
  void run(const ExprPtr& e, std::vector<ParamSpec> params, bool as_term) {
    for (const auto& p : params) {
      if (!p.sort.empty() && !vocab_.find_sort(p.sort))
        throw Diagnostic("unknown sort '" + p.sort + "'", p.line, p.col);
      int id = types_.fresh(p.sort);
      param_ids_.push_back(id);
      scope_.emplace_back(p.name, id);
    }
    if (as_term) {
      int id = infer_term(*e);
      result_id_ = id;
    } else {
      infer_formula(*e);
    }
    scope_.clear();
    // Finalize parameter and implicit variable sorts.
    for (size_t i = 0; i < params.size(); ++i)
      result_params_.push_back(Variable{params[i].name, sort_or_default(param_ids_[i], params[i].name, params[i].line,
                                                                        params[i].col)});
    for (const auto& [name, info] : implicit_order_) {
      implicit_vars_.push_back(Variable{name, sort_or_default(info.first, name, info.second.first, info.second.second)});
    }
    build_scope_.clear();
    for (const auto& v : result_params_) build_scope_.emplace_back(v.name, v);
    for (const auto& v : implicit_vars_) build_scope_.emplace_back(v.name, v);
    try {
      if (as_term) {
        term_ = build_term(*e);
      } else {
        formula_ = build_formula(*e);
        if (!implicit_vars_.empty()) formula_ = mk_forall(implicit_vars_, formula_);
      }
    } catch (const IllFormed& err) {
      throw Diagnostic(err.what(), e->line, e->col);
    }
  }

  FormulaPtr formula() const { return formula_; }
  TermPtr term() const { return term_; }
  const std::vector<Variable>& params() const { return result_params_; }

 private:
  std::string sort_or_default(int id, const std::string& name, int line, int col) {
    const std::string& s = types_.of(id);
    if (!s.empty()) return s;
    std::string only;
    int count = 0;
    for (const auto& so : vocab_.sorts())
      if (so.kind != SortKind::Integer) {
        only = so.name;
        ++count;
      }
    if (count == 1) {
      types_.require(id, only, Expr{});
      return only;
    }
    throw Diagnostic("cannot infer the sort of '" + name + "'", line, col);
  }

  int lookup(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == name) return it->second;
    return -1;
  }

  void check_binder(const Binder& b) {
    if (b.name == kDeletionVar)
      throw Diagnostic("variable name 'z' is reserved for the deleted element", b.line, b.col);
    check_user_name(b.name, b.line, b.col, "variable");
    if (vocab_.find_symbol(b.name) || defs_.count(b.name))
      throw Diagnostic("variable '" + b.name + "' shadows a declared symbol", b.line, b.col);
    if (!b.sort.empty() && !vocab_.find_sort(b.sort))
      throw Diagnostic("unknown sort '" + b.sort + "'", b.line, b.col);
  }

  void check_tagging(const Expr& e, bool is_mutable) {
    if (mode_ == Mode::Spec) {
      if (e.tag) throw Diagnostic("copy tags are only meaningful in high-low update items", e.line, e.col);
      if (e.primed && !allow_primed_)
        throw Diagnostic("primed symbol '" + e.name + "' outside a transition", e.line, e.col);
      if (e.primed && !is_mutable)
        throw Diagnostic("immutable symbol '" + e.name + "' cannot be primed", e.line, e.col);
    } else {
      if (e.tag == Tag::Low)
        throw Diagnostic("'" + e.name + "@l': high-low update items may only reference the high copy", e.line, e.col);
      if (e.primed) throw Diagnostic("primed symbol '" + e.name + "' in a high-low update item", e.line, e.col);
    }
  }

  Tag tag_for(const Expr& e) const {
    if (mode_ == Mode::Stage) return Tag::High;
    return e.primed ? Tag::Primed : Tag::Plain;
  }

  void check_args(const Expr& e, size_t arity) {
    if (e.args.size() != arity)
      throw Diagnostic("'" + e.name + "' expects " + std::to_string(arity) + " argument" + (arity == 1 ? "" : "s") +
                           ", got " + std::to_string(e.args.size()),
                       e.line, e.col);
  }

  int implicit_var(const Expr& e) {
    auto it = implicit_ids_.find(e.name);
    if (it != implicit_ids_.end()) return it->second;
    int id = types_.fresh();
    implicit_ids_[e.name] = id;
    implicit_order_.push_back({e.name, {id, {e.line, e.col}}});
    scope_.insert(scope_.begin(), {e.name, id});
    return id;
  }

  int infer_term(const Expr& e) {
    switch (e.k) {
      case Expr::K::Int: return types_.fresh(kIntSort);
      case Expr::K::Add:
      case Expr::K::Sub: {
        for (const auto& a : e.args) types_.require(infer_term(*a), kIntSort, *a);
        return types_.fresh(kIntSort);
      }
      case Expr::K::Ite: {
        infer_formula(*e.args[0]);
        int a = infer_term(*e.args[1]);
        int b = infer_term(*e.args[2]);
        types_.unify(a, b, e);
        return a;
      }
      case Expr::K::Ident: {
        int var = lookup(e.name);
        if (var >= 0) {
          if (e.call || e.primed || e.tag) throw Diagnostic("variable '" + e.name + "' cannot be applied", e.line, e.col);
          return var;
        }
        if (const auto* d = vocab_.find_symbol(e.name)) {
          if (d->is_relation())
            throw Diagnostic("relation '" + e.name + "' used where a term is expected", e.line, e.col);
          check_args(e, d->arity());
          check_tagging(e, d->is_mutable);
          for (size_t i = 0; i < e.args.size(); ++i) types_.require(infer_term(*e.args[i]), d->args[i], *e.args[i]);
          return types_.fresh(d->result);
        }
        if (defs_.count(e.name))
          throw Diagnostic("definition '" + e.name + "' used where a term is expected", e.line, e.col);
        if (e.name == kDeletionVar)
          throw Diagnostic("variable name 'z' is reserved for the deleted element", e.line, e.col);
        if (implicit_ && capitalized(e.name) && !e.call && !e.primed && !e.tag) {
          check_user_name(e.name, e.line, e.col, "variable");
          return implicit_var(e);
        }
        throw Diagnostic("unknown symbol '" + e.name + "'", e.line, e.col);
      }
      default: throw Diagnostic("expected a term", e.line, e.col);
    }
  }

  void infer_formula(const Expr& e) {
    switch (e.k) {
      case Expr::K::Bool: return;
      case Expr::K::Not:
      case Expr::K::And:
      case Expr::K::Or:
      case Expr::K::Implies:
      case Expr::K::Iff:
        for (const auto& a : e.args) infer_formula(*a);
        return;
      case Expr::K::Cmp: {
        int a = infer_term(*e.args[0]);
        int b = infer_term(*e.args[1]);
        if (e.name == "=" || e.name == "!=") {
          types_.unify(a, b, e);
        } else {
          types_.require(a, kIntSort, *e.args[0]);
          types_.require(b, kIntSort, *e.args[1]);
        }
        return;
      }
      case Expr::K::Quant: {
        std::vector<int> ids;
        for (const auto& b : e.binders) {
          check_binder(b);
          int id = types_.fresh(b.sort);
          ids.push_back(id);
          scope_.emplace_back(b.name, id);
        }
        binder_ids_[&e] = ids;
        infer_formula(*e.args[0]);
        scope_.resize(scope_.size() - e.binders.size());
        return;
      }
      case Expr::K::Ident: {
        if (lookup(e.name) >= 0)
          throw Diagnostic("variable '" + e.name + "' used where a formula is expected", e.line, e.col);
        if (const auto* d = vocab_.find_symbol(e.name)) {
          if (!d->is_relation())
            throw Diagnostic("'" + e.name + "' is not a relation", e.line, e.col);
          check_args(e, d->arity());
          check_tagging(e, d->is_mutable);
          for (size_t i = 0; i < e.args.size(); ++i) types_.require(infer_term(*e.args[i]), d->args[i], *e.args[i]);
          return;
        }
        if (auto it = defs_.find(e.name); it != defs_.end()) {
          check_args(e, it->second.params.size());
          check_tagging(e, true);
          for (size_t i = 0; i < e.args.size(); ++i)
            types_.require(infer_term(*e.args[i]), it->second.params[i].sort, *e.args[i]);
          return;
        }
        throw Diagnostic("unknown symbol '" + e.name + "'", e.line, e.col);
      }
      default: throw Diagnostic("expected a formula", e.line, e.col);
    }
  }

  Variable lookup_var(const std::string& name) const {
    for (auto it = build_scope_.rbegin(); it != build_scope_.rend(); ++it)
      if (it->first == name) return it->second;
    throw IllFormed("unbound variable '" + name + "'");
  }

  TermPtr build_term(const Expr& e) {
    switch (e.k) {
      case Expr::K::Int: return mk_int(e.value);
      case Expr::K::Add: return mk_add(build_term(*e.args[0]), build_term(*e.args[1]));
      case Expr::K::Sub: return mk_sub(build_term(*e.args[0]), build_term(*e.args[1]));
      case Expr::K::Ite: return mk_ite(build_formula(*e.args[0]), build_term(*e.args[1]), build_term(*e.args[2]));
      case Expr::K::Ident: {
        for (auto it = build_scope_.rbegin(); it != build_scope_.rend(); ++it)
          if (it->first == e.name) return mk_var(it->second);
        const auto& d = vocab_.symbol(e.name);
        std::vector<TermPtr> args;
        for (const auto& a : e.args) args.push_back(build_term(*a));
        return mk_app(d, std::move(args), tag_for(e));
      }
      default: throw IllFormed("expected a term");
    }
  }

  FormulaPtr build_formula(const Expr& e) {
    switch (e.k) {
      case Expr::K::Bool: return mk_bool(e.bval);
      case Expr::K::Not: return mk_not(build_formula(*e.args[0]));
      case Expr::K::And:
      case Expr::K::Or: {
        std::vector<FormulaPtr> subs;
        for (const auto& a : e.args) subs.push_back(build_formula(*a));
        return e.k == Expr::K::And ? mk_and(std::move(subs)) : mk_or(std::move(subs));
      }
      case Expr::K::Implies: return mk_implies(build_formula(*e.args[0]), build_formula(*e.args[1]));
      case Expr::K::Iff: return mk_iff(build_formula(*e.args[0]), build_formula(*e.args[1]));
      case Expr::K::Cmp: {
        TermPtr a = build_term(*e.args[0]);
        TermPtr b = build_term(*e.args[1]);
        if (e.name == "=") return mk_eq(a, b);
        if (e.name == "!=") return mk_neq(a, b);
        if (e.name == "<") return mk_less(a, b);
        if (e.name == "<=") return mk_less_eq(a, b);
        if (e.name == ">") return mk_less(b, a);
        return mk_less_eq(b, a);
      }
      case Expr::K::Quant: {
        const auto& ids = binder_ids_.at(&e);
        std::vector<Variable> vars;
        for (size_t i = 0; i < e.binders.size(); ++i) {
          const auto& b = e.binders[i];
          Variable v{b.name, sort_or_default(ids[i], b.name, b.line, b.col)};
          vars.push_back(v);
          build_scope_.emplace_back(v.name, v);
        }
        FormulaPtr body = build_formula(*e.args[0]);
        build_scope_.resize(build_scope_.size() - vars.size());
        return e.name == "forall" ? mk_forall(vars, body) : mk_exists(vars, body);
      }
      case Expr::K::Ident: {
        std::vector<TermPtr> args;
        for (const auto& a : e.args) args.push_back(build_term(*a));
        if (const auto* d = vocab_.find_symbol(e.name)) return mk_pred(*d, std::move(args), tag_for(e));
        return mk_pred_raw(e.name, std::move(args), tag_for(e), false);
      }
      default: throw IllFormed("expected a formula");
    }
  }

  const Vocabulary& vocab_;
  const std::map<std::string, Definition>& defs_;
  Mode mode_;
  bool allow_primed_;
  bool implicit_;
  Types types_;
  std::vector<std::pair<std::string, int>> scope_;
  std::vector<int> param_ids_;
  std::map<const Expr*, std::vector<int>> binder_ids_;
  std::map<std::string, int> implicit_ids_;
  std::vector<std::pair<std::string, std::pair<int, std::pair<int, int>>>> implicit_order_;
  std::vector<Variable> implicit_vars_;
  std::vector<Variable> result_params_;
  std::vector<std::pair<std::string, Variable>> build_scope_;
  int result_id_ = -1;
  FormulaPtr formula_;
  TermPtr term_;
};

// ---------------------------------------------------------------------------
// Declarations

class SpecParser {
 public:
  ParsedSpec run(const std::string& text) {
    auto items = split_items(lex(text));
    std::vector<const Item*> stage_items;
    for (const auto& it : items) {
      if (it.tokens.empty()) continue;
      const std::string& kw = it.tokens[0].text;
      if (kw == "stage" || kw == "bound" || kw == "condition" || kw == "update" || kw == "hint" || kw == "invariant" || kw == "extend") {
        stage_items.push_back(&it);
        continue;
      }
      if (!stage_items.empty())
        throw Diagnostic("protocol declarations must precede high-low update items", it.line, 1);
      spec_item(it);
    }
    if (!safety_seen_) throw Diagnostic("missing safety property", 0, 0);

    // Stage items see the Skolem constants the pipeline will introduce.
    ProtocolSpec sk = skolemize_safety(expand_definitions(out_.spec));
    stage_vocab_ = sk.vocab;
    for (const Item* it : stage_items) stage_item(*it);
    return std::move(out_);
  }

 private:
  void declare_sort(ExprParser& p) {
    const Token& name = p.ident("a sort name");
    Sort s;
    s.name = name.text;
    if (name.text == kIntSort) {
      s.kind = SortKind::Integer;
    } else {
      check_user_name(name.text, name.line, name.col, "sort");
      if (p.accept("bounded")) {
        s.kind = SortKind::Bounded;
        s.bound = p.integer();
      }
    }
    p.done();
    try {
      out_.spec.vocab.add_sort(s);
    } catch (const IllFormed& e) {
      throw Diagnostic(e.what(), name.line, name.col);
    }
  }

  void declare_symbol(ExprParser& p, bool is_mutable) {
    const Token& kind = p.ident("relation, function or constant");
    SymbolDecl d;
    d.is_mutable = is_mutable;
    if (kind.text == "relation") d.kind = SymbolKind::Relation;
    else if (kind.text == "function") d.kind = SymbolKind::Function;
    else if (kind.text == "constant") d.kind = SymbolKind::Constant;
    else throw Diagnostic("expected relation, function or constant", kind.line, kind.col);
    const Token& name = p.ident("a symbol name");
    check_user_name(name.text, name.line, name.col, "symbol");
    if (name.text == kDeletionVar) throw Diagnostic("'z' is reserved for the deleted element", name.line, name.col);
    d.name = name.text;
    if (d.kind != SymbolKind::Constant && p.accept("(")) {
      if (!p.is(")")) {
        do d.args.push_back(p.ident("a sort name").text);
        while (p.accept(","));
      }
      p.expect(")");
    }
    if (d.kind != SymbolKind::Relation) {
      p.expect(":");
      d.result = p.ident("a sort name").text;
    }
    p.done();
    if (defs_.count(d.name)) throw Diagnostic("duplicate declaration of '" + d.name + "'", name.line, name.col);
    try {
      out_.spec.vocab.add_symbol(d);
    } catch (const IllFormed& e) {
      throw Diagnostic(e.what(), name.line, name.col);
    }
  }

  std::vector<ParamSpec> param_list(ExprParser& p, bool typed) {
    std::vector<ParamSpec> params;
    p.expect("(");
    if (!p.is(")")) {
      do {
        const Token& v = p.ident("a parameter name");
        ParamSpec ps{v.text, "", v.line, v.col};
        if (p.accept(":")) ps.sort = p.ident("a sort name").text;
        else if (typed) p.fail("expected ':' and a sort");
        params.push_back(ps);
      } while (p.accept(","));
    }
    p.expect(")");
    std::set<std::string> seen;
    for (const auto& ps : params)
      if (!seen.insert(ps.name).second) throw Diagnostic("duplicate parameter '" + ps.name + "'", ps.line, ps.col);
    return params;
  }

  void check_params(const std::vector<ParamSpec>& params, const Vocabulary& vocab, bool allow_z_last) {
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& ps = params[i];
      bool last = i + 1 == params.size();
      if (ps.name == kDeletionVar && !(allow_z_last && last))
        throw Diagnostic("variable name 'z' is reserved for the deleted element", ps.line, ps.col);
      if (ps.name != kDeletionVar) check_user_name(ps.name, ps.line, ps.col, "parameter");
      if (vocab.find_symbol(ps.name) || defs_.count(ps.name))
        throw Diagnostic("parameter '" + ps.name + "' shadows a declared symbol", ps.line, ps.col);
      if (!ps.sort.empty() && !vocab.find_sort(ps.sort))
        throw Diagnostic("unknown sort '" + ps.sort + "'", ps.line, ps.col);
    }
  }

  FormulaPtr closed_formula(ExprParser& p, bool allow_primed = false) {
    ExprPtr e = p.expr();
    p.done();
    Resolver r(out_.spec.vocab, defs_, Mode::Spec, allow_primed, true);
    r.run(e, {}, false);
    return r.formula();
  }

  void spec_item(const Item& it) {
    ExprParser p(it.tokens);
    const Token& kw = p.ident("a declaration keyword");
    if (kw.text != "transition" && !it.body.empty())
      throw Diagnostic("unexpected indented block", it.line, 1);
    if (kw.text == "sort") return declare_sort(p);
    if (kw.text == "mutable") return declare_symbol(p, true);
    if (kw.text == "immutable") return declare_symbol(p, false);
    if (kw.text == "relation" || kw.text == "function" || kw.text == "constant") {
      ExprParser again(it.tokens);
      return declare_symbol(again, true);
    }
    if (kw.text == "axiom") {
      out_.spec.axioms.push_back(closed_formula(p));
      return;
    }
    if (kw.text == "init") {
      out_.spec.inits.push_back(closed_formula(p));
      return;
    }
    if (kw.text == "safety") {
      if (safety_seen_) throw Diagnostic("duplicate safety property", kw.line, kw.col);
      out_.spec.safety = closed_formula(p);
      safety_seen_ = true;
      return;
    }
    if (kw.text == "def") return definition(p);
    if (kw.text == "transition") return transition(p, it);
    throw Diagnostic("unknown declaration '" + kw.text + "'", kw.line, kw.col);
  }

  void definition(ExprParser& p) {
    const Token& name = p.ident("a definition name");
    check_user_name(name.text, name.line, name.col, "definition");
    if (out_.spec.vocab.find_symbol(name.text) || defs_.count(name.text))
      throw Diagnostic("duplicate declaration of '" + name.text + "'", name.line, name.col);
    std::vector<ParamSpec> params;
    if (p.is("(")) params = param_list(p, false);
    check_params(params, out_.spec.vocab, false);
    p.expect(":=");
    ExprPtr e = p.expr();
    p.done();
    Resolver r(out_.spec.vocab, defs_, Mode::Spec, false, false);
    r.run(e, params, false);
    Definition d{name.text, r.params(), r.formula()};
    defs_[d.name] = d;
    out_.spec.definitions.push_back(d);
  }

  void transition(ExprParser& p, const Item& it) {
    const Token& name = p.ident("a transition name");
    check_user_name(name.text, name.line, name.col, "transition");
    if (out_.spec.find_transition(name.text))
      throw Diagnostic("duplicate transition '" + name.text + "'", name.line, name.col);
    std::vector<ParamSpec> params;
    if (p.is("(")) params = param_list(p, true);
    check_params(params, out_.spec.vocab, false);
    p.done();
    TransitionDef t;
    t.name = name.text;
    for (const auto& ps : params) t.params.push_back(Variable{ps.name, ps.sort});
    for (const auto& body : it.body) {
      ExprParser bp(body);
      bool assume = bp.accept("assume");
      ExprPtr e = bp.expr();
      bp.done();
      Resolver r(out_.spec.vocab, defs_, Mode::Spec, !assume, true);
      r.run(e, params, false);
      (assume ? t.assumes : t.clauses).push_back(r.formula());
    }
    out_.spec.transitions.push_back(std::move(t));
  }

  // ---- stage items ----

  HighLowUpdate& stage_for(const std::string& sort, const Token& at) {
    const Sort* s = stage_vocab_.find_sort(sort);
    if (!s) throw Diagnostic("unknown sort '" + sort + "'", at.line, at.col);
    if (s->kind != SortKind::Uninterpreted)
      throw Diagnostic("sort '" + sort + "' is not a finite-unbounded sort", at.line, at.col);
    for (size_t i = 0; i < out_.task.stages.size(); ++i)
      if (out_.task.stages[i].sort == sort) {
        current_ = static_cast<int>(i);
        return out_.task.stages[i];
      }
    HighLowUpdate u;
    u.sort = sort;
    out_.task.stages.push_back(u);
    current_ = static_cast<int>(out_.task.stages.size()) - 1;
    return out_.task.stages.back();
  }

  HighLowUpdate& current_stage(const Token& at) {
    if (current_ < 0) throw Diagnostic("'" + at.text + "' must follow an item naming the stage's sort", at.line, at.col);
    return out_.task.stages[current_];
  }

  // Deletion parameter must come last, be named z and carry the stage sort.
  std::string deletion_sort(const std::vector<ParamSpec>& params, const Token& at) {
    if (params.empty() || params.back().name != kDeletionVar || params.back().sort.empty())
      throw Diagnostic("the last parameter must be 'z: <sort>'", at.line, at.col);
    return params.back().sort;
  }

  void check_stage_symbols(const FormulaPtr& f, int stage, int line) {
    for (const auto& ref : symbols_of(f)) check_stage_symbol(ref.name, stage, line);
  }
  void check_stage_symbol(const std::string& name, int stage, int line) {
    auto it = ext_owner_.find(name);
    if (it != ext_owner_.end() && it->second > stage)
      throw Diagnostic("'" + name + "' is introduced by a later stage", line, 1);
  }

  void stage_item(const Item& it) {
    ExprParser p(it.tokens);
    const Token& kw = p.ident();
    if (kw.text == "stage") {
      const Token& sort = p.ident("a sort name");
      stage_for(sort.text, sort);
      p.done();
      return;
    }
    if (kw.text == "bound") {
      const Token& sort = p.ident("a sort name");
      auto& st = stage_for(sort.text, sort);
      if (st.bound_user) throw Diagnostic("duplicate bound for sort '" + sort.text + "'", kw.line, kw.col);
      st.bound = p.integer();
      st.bound_user = true;
      p.done();
      return;
    }
    if (kw.text == "condition") {
      auto params = param_list(p, true);
      check_params(params, stage_vocab_, true);
      std::string sort = deletion_sort(params, kw);
      if (params.size() != 1) throw Diagnostic("a condition takes only the parameter z", kw.line, kw.col);
      auto& st = stage_for(sort, kw);
      if (st.condition_user) throw Diagnostic("duplicate condition for sort '" + sort + "'", kw.line, kw.col);
      p.expect("=");
      ExprPtr e = p.expr();
      p.done();
      Resolver r(stage_vocab_, defs_, Mode::Stage, false, false);
      r.run(e, params, false);
      check_stage_symbols(r.formula(), current_, it.line);
      st.condition = r.formula();
      st.condition_user = true;
      return;
    }
    if (kw.text == "update") return update_item(p, kw, it);
    if (kw.text == "hint") return hint_item(p, kw, it);
    if (kw.text == "invariant") {
      auto& st = current_stage(kw);
      ExprPtr e = p.expr();
      p.done();
      Resolver r(stage_vocab_, defs_, Mode::Stage, false, true);
      r.run(e, {}, false);
      check_stage_symbols(r.formula(), current_, it.line);
      st.invariant = st.invariant ? mk_and(st.invariant, r.formula()) : r.formula();
      return;
    }
    if (kw.text == "extend") return extend_item(p, kw, it);
    throw Diagnostic("unknown declaration '" + kw.text + "'", kw.line, kw.col);
  }

  void update_item(ExprParser& p, const Token& kw, const Item& it) {
    const Token& name = p.ident("a symbol name");
    auto params = param_list(p, true);
    check_params(params, stage_vocab_, true);
    std::string sort = deletion_sort(params, kw);
    auto& st = stage_for(sort, kw);
    const SymbolDecl* d = stage_vocab_.find_symbol(name.text);
    if (!d) throw Diagnostic("unknown symbol '" + name.text + "'", name.line, name.col);
    if (st.relations.count(d->name) || st.functions.count(d->name))
      throw Diagnostic("duplicate update for '" + d->name + "'", name.line, name.col);
    if (params.size() != d->arity() + 1)
      throw Diagnostic("update of '" + d->name + "' needs " + std::to_string(d->arity() + 1) + " parameters",
                       name.line, name.col);
    for (size_t i = 0; i < d->arity(); ++i)
      if (params[i].sort != d->args[i])
        throw Diagnostic("parameter '" + params[i].name + "' should have sort '" + d->args[i] + "'", params[i].line,
                         params[i].col);
    p.expect("=");
    ExprPtr e = p.expr();
    p.done();
    Resolver r(stage_vocab_, defs_, Mode::Stage, false, false);
    bool is_rel = d->is_relation();
    r.run(e, params, !is_rel);
    std::vector<Variable> args(r.params().begin(), r.params().end() - 1);
    auto refs = is_rel ? symbols_of(r.formula()) : symbols_of(r.term());
    for (const auto& ref : refs) {
      check_stage_symbol(ref.name, current_, it.line);
      const auto* used = stage_vocab_.find_symbol(ref.name);
      if (!d->is_mutable && used && used->is_mutable)
        throw Diagnostic("update of immutable '" + d->name + "' may only use immutable symbols", name.line, name.col);
    }
    if (is_rel) {
      st.relations[d->name] = RelationUpdate{args, r.formula(), true};
    } else {
      if (r.term()->sort != d->result)
        throw Diagnostic("update term has sort '" + r.term()->sort + "', expected '" + d->result + "'", e->line, e->col);
      st.functions[d->name] = FunctionUpdate{args, r.term(), true};
    }
  }

  void hint_item(ExprParser& p, const Token& kw, const Item& it) {
    const Token& name = p.ident("a transition name");
    const TransitionDef* src = out_.spec.find_transition(name.text);
    if (!src) throw Diagnostic("unknown transition '" + name.text + "'", name.line, name.col);
    auto params = param_list(p, true);
    check_params(params, stage_vocab_, true);
    std::string sort = deletion_sort(params, kw);
    auto& st = stage_for(sort, kw);
    const TransitionDef* tgt = src;
    if (p.accept("->")) {
      const Token& tn = p.ident("a transition name");
      tgt = out_.spec.find_transition(tn.text);
      if (!tgt) throw Diagnostic("unknown transition '" + tn.text + "'", tn.line, tn.col);
    }
    if (st.hints.count(src->name)) throw Diagnostic("duplicate hint for '" + src->name + "'", name.line, name.col);
    size_t nh = src->params.size(), nl = tgt->params.size();
    if (params.size() != nh + nl + 1)
      throw Diagnostic("hint for '" + src->name + "' needs " + std::to_string(nh + nl + 1) + " parameters", name.line,
                       name.col);
    for (size_t i = 0; i < nh + nl; ++i) {
      const auto& expect = i < nh ? src->params[i].sort : tgt->params[i - nh].sort;
      if (params[i].sort != expect)
        throw Diagnostic("parameter '" + params[i].name + "' should have sort '" + expect + "'", params[i].line,
                         params[i].col);
    }
    p.expect("=");
    ExprPtr e = p.expr();
    p.done();
    Resolver r(stage_vocab_, defs_, Mode::Stage, false, false);
    r.run(e, params, false);
    check_stage_symbols(r.formula(), current_, it.line);
    Hint h;
    h.transition = src->name;
    h.target = tgt->name;
    h.high.assign(r.params().begin(), r.params().begin() + nh);
    h.low.assign(r.params().begin() + nh, r.params().end() - 1);
    h.formula = r.formula();
    st.hints[src->name] = h;
  }

  void extend_item(ExprParser& p, const Token& kw, const Item& it) {
    auto& st = current_stage(kw);
    const Token& what = p.ident("constant or axiom");
    if (what.text == "constant") {
      const Token& name = p.ident("a constant name");
      check_user_name(name.text, name.line, name.col, "symbol");
      p.expect(":");
      const Token& sort = p.ident("a sort name");
      p.done();
      SymbolDecl d;
      d.name = name.text;
      d.kind = SymbolKind::Constant;
      d.result = sort.text;
      d.is_mutable = false;
      if (defs_.count(d.name)) throw Diagnostic("duplicate declaration of '" + d.name + "'", name.line, name.col);
      try {
        stage_vocab_.add_symbol(d);
      } catch (const IllFormed& e) {
        throw Diagnostic(e.what(), name.line, name.col);
      }
      ext_owner_[d.name] = current_;
      st.extension.constants.push_back(d);
      return;
    }
    if (what.text == "axiom") {
      ExprPtr e = p.expr();
      p.done();
      Resolver r(stage_vocab_, defs_, Mode::Spec, false, true);
      r.run(e, {}, false);
      for (const auto& ref : symbols_of(r.formula())) {
        check_stage_symbol(ref.name, current_, it.line);
        const auto* d = stage_vocab_.find_symbol(ref.name);
        if (d && d->is_mutable)
          throw Diagnostic("extension axioms may only mention immutable symbols ('" + ref.name + "' is mutable)",
                           it.line, 1);
      }
      st.extension.axioms.push_back(r.formula());
      return;
    }
    throw Diagnostic("expected 'constant' or 'axiom' after 'extend'", what.line, what.col);
  }

  ParsedSpec out_;
  std::map<std::string, Definition> defs_;
  bool safety_seen_ = false;
  Vocabulary stage_vocab_;
  std::map<std::string, int> ext_owner_;
  int current_ = -1;
};

}  // namespace

ParsedSpec parse_spec(const std::string& text) { return SpecParser().run(text); }

ParsedSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Diagnostic("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

// ---------------------------------------------------------------------------
// Definition expansion

namespace {

class Expander {
 public:
  explicit Expander(const std::vector<Definition>& defs) {
    for (const auto& d : defs) defs_[d.name] = &d;
  }

  FormulaPtr run(const FormulaPtr& f) {
    switch (f->kind) {
      case Formula::Kind::Pred: {
        auto it = defs_.find(f->symbol);
        if (it == defs_.end()) return f;
        const Definition& d = *it->second;
        if (active_.count(d.name)) throw Diagnostic("cyclic definition '" + d.name + "'");
        active_.insert(d.name);
        FormulaPtr body = run(d.body);
        active_.erase(d.name);
        body = retag(body, TagMap{{Tag::Plain, f->tag}});
        Binding b;
        for (size_t i = 0; i < d.params.size(); ++i) b[d.params[i]] = f->terms[i];
        return substitute(body, b);
      }
      case Formula::Kind::True:
      case Formula::Kind::False:
      case Formula::Kind::Eq:
      case Formula::Kind::Less:
      case Formula::Kind::LessEq: {
        bool has_ite = false;
        for (const auto& t : f->terms) has_ite |= term_has_formula(t);
        if (!has_ite) return f;
        auto g = std::make_shared<Formula>(*f);
        for (auto& t : g->terms) t = run(t);
        return g;
      }
      default: break;
    }
    auto g = std::make_shared<Formula>(*f);
    for (auto& s : g->subs) s = run(s);
    for (auto& t : g->terms) t = run(t);
    return g;
  }

  TermPtr run(const TermPtr& t) {
    if (!term_has_formula(t)) return t;
    auto u = std::make_shared<Term>(*t);
    for (auto& a : u->args) a = run(a);
    if (u->cond) u->cond = run(u->cond);
    return u;
  }

 private:
  static bool term_has_formula(const TermPtr& t) {
    if (t->cond) return true;
    for (const auto& a : t->args)
      if (term_has_formula(a)) return true;
    return false;
  }

  std::map<std::string, const Definition*> defs_;
  std::set<std::string> active_;
};

}  // namespace

ProtocolSpec expand_definitions(const ProtocolSpec& spec) {
  if (spec.definitions.empty()) return spec;
  Expander ex(spec.definitions);
  ProtocolSpec out = spec;
  out.definitions.clear();
  for (auto& a : out.axioms) a = ex.run(a);
  for (auto& i : out.inits) i = ex.run(i);
  for (auto& t : out.transitions) {
    for (auto& a : t.assumes) a = ex.run(a);
    for (auto& c : t.clauses) c = ex.run(c);
  }
  out.safety = ex.run(out.safety);
  return out;
}

HighLowUpdate expand_definitions(const HighLowUpdate& update, const ProtocolSpec& spec) {
  if (spec.definitions.empty()) return update;
  Expander ex(spec.definitions);
  HighLowUpdate out = update;
  if (out.condition) out.condition = ex.run(out.condition);
  if (out.invariant) out.invariant = ex.run(out.invariant);
  for (auto& [_, r] : out.relations) r.formula = ex.run(r.formula);
  for (auto& [_, f] : out.functions) f.term = ex.run(f.term);
  for (auto& [_, h] : out.hints) h.formula = ex.run(h.formula);
  for (auto& a : out.extension.axioms) a = ex.run(a);
  return out;
}

// ---------------------------------------------------------------------------
// NNF and Skolemization

namespace {

FormulaPtr nnf_rec(const FormulaPtr& f, bool positive) {
  using K = Formula::Kind;
  switch (f->kind) {
    case K::True:
    case K::False: return positive ? f : mk_bool(f->kind == K::False);
    case K::Eq:
    case K::Pred:
    case K::Less:
    case K::LessEq: return positive ? f : mk_not(f);
    case K::Not: return nnf_rec(f->subs[0], !positive);
    case K::And:
    case K::Or: {
      std::vector<FormulaPtr> subs;
      for (const auto& s : f->subs) subs.push_back(nnf_rec(s, positive));
      bool conj = (f->kind == K::And) == positive;
      return conj ? mk_and(std::move(subs)) : mk_or(std::move(subs));
    }
    case K::Implies:
      if (positive) return mk_or(nnf_rec(f->subs[0], false), nnf_rec(f->subs[1], true));
      return mk_and(nnf_rec(f->subs[0], true), nnf_rec(f->subs[1], false));
    case K::Iff: {
      auto a = f->subs[0], b = f->subs[1];
      if (positive)
        return mk_or(mk_and(nnf_rec(a, true), nnf_rec(b, true)), mk_and(nnf_rec(a, false), nnf_rec(b, false)));
      return mk_or(mk_and(nnf_rec(a, true), nnf_rec(b, false)), mk_and(nnf_rec(a, false), nnf_rec(b, true)));
    }
    case K::Forall:
    case K::Exists: {
      bool universal = (f->kind == K::Forall) == positive;
      auto body = nnf_rec(f->subs[0], positive);
      return universal ? mk_forall(f->bound, body) : mk_exists(f->bound, body);
    }
  }
  return f;
}

bool has_exists(const FormulaPtr& f) {
  if (f->kind == Formula::Kind::Exists) return true;
  for (const auto& s : f->subs)
    if (has_exists(s)) return true;
  return false;
}

void collect_outer_exists(const FormulaPtr& f, std::vector<Variable>& out) {
  if (f->kind == Formula::Kind::Forall) return;
  if (f->kind == Formula::Kind::Exists) out.push_back(f->bound);
  for (const auto& s : f->subs) collect_outer_exists(s, out);
}

FormulaPtr strip_exists(const FormulaPtr& f, std::vector<TermPtr>& consts, size_t& next) {
  using K = Formula::Kind;
  if (f->kind == K::Forall) {
    if (has_exists(f->subs[0]))
      throw Diagnostic("unsupported safety shape: an existential of the negated safety property lies under a universal");
    return f;
  }
  if (f->kind == K::Exists) {
    TermPtr c = consts[next++];
    FormulaPtr body = substitute(f->subs[0], Binding{{f->bound, c}});
    return strip_exists(body, consts, next);
  }
  if (f->kind == K::And || f->kind == K::Or) {
    std::vector<FormulaPtr> subs;
    for (const auto& s : f->subs) subs.push_back(strip_exists(s, consts, next));
    return f->kind == K::And ? mk_and(std::move(subs)) : mk_or(std::move(subs));
  }
  return f;
}

}  // namespace

FormulaPtr nnf(const FormulaPtr& f) { return nnf_rec(f, true); }

ProtocolSpec skolemize_safety(const ProtocolSpec& spec) {
  FormulaPtr neg = nnf(mk_not(spec.safety));
  std::vector<Variable> witnesses;
  collect_outer_exists(neg, witnesses);
  if (witnesses.empty()) {
    if (has_exists(neg))
      throw Diagnostic("unsupported safety shape: an existential of the negated safety property lies under a universal");
    return spec;
  }
  ProtocolSpec out = spec;
  std::map<std::string, int> per_sort, used;
  for (const auto& w : witnesses) per_sort[w.sort]++;
  std::vector<TermPtr> consts;
  for (const auto& w : witnesses) {
    std::string base(1, static_cast<char>(std::tolower(static_cast<unsigned char>(w.sort[0]))));
    if (per_sort[w.sort] > 1) base += std::to_string(++used[w.sort]);
    std::string name = base + "_sk";
    for (int extra = 1; out.vocab.find_symbol(name); ++extra) name = base + "_" + std::to_string(extra) + "_sk";
    SymbolDecl d;
    d.name = name;
    d.kind = SymbolKind::Constant;
    d.result = w.sort;
    d.is_mutable = false;
    out.vocab.add_symbol(d);
    out.skolem_constants.push_back(name);
    consts.push_back(mk_app(out.vocab.symbol(name), {}));
  }
  size_t next = 0;
  FormulaPtr body = strip_exists(neg, consts, next);
  out.unskolemized_safety = spec.safety;
  out.safety = mk_not(body);
  return out;
}

// ---------------------------------------------------------------------------
// Defaults

Vocabulary extend_vocabulary(const Vocabulary& vocab, const StageExtension& ext) {
  Vocabulary out = vocab;
  for (const auto& c : ext.constants)
    if (!out.find_symbol(c.name)) out.add_symbol(c);
  return out;
}

HighLowUpdate apply_defaults(const HighLowUpdate& update, const Vocabulary& vocab) {
  HighLowUpdate out = update;
  const Sort& sort = vocab.sort(update.sort);
  if (sort.kind != SortKind::Uninterpreted)
    throw Diagnostic("stage sort '" + update.sort + "' is not a finite-unbounded sort");
  Variable z = out.z();
  auto consts = vocab.immutable_constants(update.sort);
  if (!out.condition) {
    std::vector<FormulaPtr> parts;
    for (const auto& c : consts) parts.push_back(mk_neq(mk_var(z), mk_app(vocab.symbol(c), {}, Tag::High)));
    out.condition = mk_and(parts);
  }
  if (!out.bound) out.bound = static_cast<int64_t>(consts.size());

  auto only_high = [&](const std::set<SymbolRef>& refs, const std::string& what) {
    for (const auto& r : refs)
      if (r.tag != Tag::High)
        throw Diagnostic(what + " references '" + r.name + "' outside the high copy");
  };
  auto free_ok = [&](const std::set<Variable>& fv, std::vector<Variable> allowed, const std::string& what) {
    allowed.push_back(z);
    for (const auto& v : fv)
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw Diagnostic(what + " has unexpected free variable '" + v.name + "'");
  };
  only_high(symbols_of(out.condition), "the deletion condition");
  free_ok(free_variables(out.condition), {}, "the deletion condition");
  if (out.invariant) {
    only_high(symbols_of(out.invariant), "the invariant");
    if (!free_variables(out.invariant).empty()) throw Diagnostic("the invariant must be closed");
  }

  for (const auto& d : vocab.symbols()) {
    std::vector<Variable> params;
    for (size_t i = 0; i < d.args.size(); ++i) params.push_back(Variable{"x" + std::to_string(i + 1), d.args[i]});
    std::vector<TermPtr> args;
    for (const auto& p : params) args.push_back(mk_var(p));
    if (d.is_relation()) {
      auto it = out.relations.find(d.name);
      if (it == out.relations.end()) {
        out.relations[d.name] = RelationUpdate{params, mk_pred(d, args, Tag::High), false};
      } else {
        only_high(symbols_of(it->second.formula), "the update of '" + d.name + "'");
        free_ok(free_variables(it->second.formula), it->second.params, "the update of '" + d.name + "'");
        if (it->second.params.size() != d.arity()) throw Diagnostic("update of '" + d.name + "' has the wrong arity");
      }
    } else {
      auto it = out.functions.find(d.name);
      if (it == out.functions.end()) {
        out.functions[d.name] = FunctionUpdate{params, mk_app(d, args, Tag::High), false};
      } else {
        only_high(symbols_of(it->second.term), "the update of '" + d.name + "'");
        free_ok(free_variables(it->second.term), it->second.params, "the update of '" + d.name + "'");
        if (it->second.params.size() != d.arity()) throw Diagnostic("update of '" + d.name + "' has the wrong arity");
      }
    }
  }
  for (const auto& [name, _] : out.relations)
    if (!vocab.find_symbol(name)) throw Diagnostic("update for undeclared symbol '" + name + "'");
  for (const auto& [name, _] : out.functions)
    if (!vocab.find_symbol(name)) throw Diagnostic("update for undeclared symbol '" + name + "'");
  for (const auto& [name, h] : out.hints) only_high(symbols_of(h.formula), "the hint for '" + name + "'");
  return out;
}

UpdateCounts count_updates(const HighLowUpdate& update, const ProtocolSpec& spec) {
  UpdateCounts c;
  for (const auto& d : spec.vocab.symbols()) {
    if (d.kind == SymbolKind::Constant && !d.is_mutable) continue;
    ++c.updatable_symbols;
    auto r = update.relations.find(d.name);
    auto f = update.functions.find(d.name);
    if ((r != update.relations.end() && r->second.user) || (f != update.functions.end() && f->second.user))
      ++c.user_updates;
  }
  c.hints = static_cast<int>(update.hints.size());
  c.transitions = static_cast<int>(spec.transitions.size());
  c.invariant = update.invariant != nullptr;
  return c;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string params_text(const std::vector<Variable>& vs) {
  std::string s = "(";
  for (size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + vs[i].name + ": " + vs[i].sort;
  return s + ")";
}

std::string plain(const FormulaPtr& f) { return to_string(retag(f, Tag::High, Tag::Plain)); }
std::string plain(const TermPtr& t) { return to_string(retag(t, TagMap{{Tag::High, Tag::Plain}})); }

}  // namespace

std::string print_spec(const ProtocolSpec& spec, const CutoffTask& task) {
  std::ostringstream os;
  std::set<std::string> ext_names;
  for (const auto& st : task.stages)
    for (const auto& c : st.extension.constants) ext_names.insert(c.name);
  for (const auto& s : spec.vocab.sorts()) {
    os << "sort " << s.name;
    if (s.kind == SortKind::Bounded) os << " bounded " << s.bound;
    os << "\n";
  }
  for (const auto& d : spec.vocab.symbols()) {
    if (ext_names.count(d.name)) continue;
    os << (d.is_mutable ? "mutable " : "immutable ");
    if (d.kind == SymbolKind::Relation) os << "relation ";
    else if (d.kind == SymbolKind::Function) os << "function ";
    else os << "constant ";
    os << d.name;
    if (d.kind != SymbolKind::Constant && !(d.kind == SymbolKind::Relation && d.args.empty())) {
      os << "(";
      for (size_t i = 0; i < d.args.size(); ++i) os << (i ? ", " : "") << d.args[i];
      os << ")";
    }
    if (!d.is_relation()) os << " : " << d.result;
    os << "\n";
  }
  for (const auto& d : spec.definitions) os << "def " << d.name << params_text(d.params) << " := " << to_string(d.body) << "\n";
  for (const auto& a : spec.axioms) os << "axiom " << to_string(a) << "\n";
  for (const auto& i : spec.inits) os << "init " << to_string(i) << "\n";
  for (const auto& t : spec.transitions) {
    os << "transition " << t.name << params_text(t.params) << "\n";
    for (const auto& a : t.assumes) os << "  assume " << to_string(a) << "\n";
    for (const auto& c : t.clauses) os << "  " << to_string(c) << "\n";
  }
  os << "safety " << to_string(spec.safety) << "\n";
  for (const auto& st : task.stages) {
    std::string zsort = st.sort;
    os << "stage " << zsort << "\n";
    if (st.bound_user && st.bound) os << "bound " << zsort << " " << *st.bound << "\n";
    if (st.condition_user && st.condition) os << "condition(z: " << zsort << ") = " << plain(st.condition) << "\n";
    for (const auto& [name, r] : st.relations) {
      if (!r.user) continue;
      auto ps = r.params;
      ps.push_back(st.z());
      os << "update " << name << params_text(ps) << " = " << plain(r.formula) << "\n";
    }
    for (const auto& [name, f] : st.functions) {
      if (!f.user) continue;
      auto ps = f.params;
      ps.push_back(st.z());
      os << "update " << name << params_text(ps) << " = " << plain(f.term) << "\n";
    }
    for (const auto& [name, h] : st.hints) {
      auto ps = h.high;
      ps.insert(ps.end(), h.low.begin(), h.low.end());
      ps.push_back(st.z());
      os << "hint " << name << params_text(ps);
      if (h.target != h.transition) os << " -> " << h.target;
      os << " = " << plain(h.formula) << "\n";
    }
    if (st.invariant) os << "invariant " << plain(st.invariant) << "\n";
    for (const auto& c : st.extension.constants) os << "extend constant " << c.name << " : " << c.result << "\n";
    for (const auto& a : st.extension.axioms) os << "extend axiom " << to_string(a) << "\n";
  }
  return os.str();
}

}  // namespace cutoff
