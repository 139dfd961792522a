#include "cutoff/sexpr.hpp"

#include <cctype>

#include "cutoff/error.hpp"

namespace cutoff {

std::string SExpr::str() const {
  if (!is_list) return atom;
  std::string s = "(";
  for (size_t i = 0; i < items.size(); ++i) s += (i ? " " : "") + items[i].str();
  return s + ")";
}

namespace {

struct Reader {
  const std::string& text;
  size_t pos = 0;

  void skip() {
    while (pos < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else if (text[pos] == ';') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip();
    if (pos >= text.size()) throw InfrastructureError("unexpected end of solver output");
    char c = text[pos];
    SExpr e;
    if (c == '(') {
      ++pos;
      e.is_list = true;
      for (;;) {
        skip();
        if (pos >= text.size()) throw InfrastructureError("unbalanced parenthesis in solver output");
        if (text[pos] == ')') {
          ++pos;
          return e;
        }
        e.items.push_back(read());
      }
    }
    if (c == ')') throw InfrastructureError("unexpected ')' in solver output");
    if (c == '|') {
      size_t end = text.find('|', pos + 1);
      if (end == std::string::npos) throw InfrastructureError("unterminated quoted symbol in solver output");
      e.atom = text.substr(pos + 1, end - pos - 1);
      pos = end + 1;
      return e;
    }
    if (c == '"') {
      size_t i = pos + 1;
      for (; i < text.size(); ++i) {
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            ++i;
            continue;
          }
          break;
        }
      }
      if (i >= text.size()) throw InfrastructureError("unterminated string in solver output");
      e.atom = text.substr(pos, i - pos + 1);
      pos = i + 1;
      return e;
    }
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '(' &&
           text[pos] != ')' && text[pos] != ';')
      ++pos;
    e.atom = text.substr(start, pos - start);
    return e;
  }
};

}  // namespace

std::vector<SExpr> parse_sexprs(const std::string& text) {
  Reader r{text};
  std::vector<SExpr> out;
  for (;;) {
    r.skip();
    if (r.pos >= text.size()) return out;
    out.push_back(r.read());
  }
}

size_t complete_prefix(const std::string& text) {
  size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    } else if (text[i] == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else {
      break;
    }
  }
  if (i >= text.size()) return 0;
  if (text[i] != '(') {
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    return j < text.size() ? j : 0;
  }
  int depth = 0;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '|') {
      size_t end = text.find('|', i + 1);
      if (end == std::string::npos) return 0;
      i = end;
    } else if (c == '"') {
      size_t j = i + 1;
      while (j < text.size() && !(text[j] == '"' && (j + 1 >= text.size() || text[j + 1] != '"'))) j += text[j] == '"' ? 2 : 1;
      if (j >= text.size()) return 0;
      i = j;
    } else if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
      if (i >= text.size()) return 0;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth == 0) return i + 1;
    }
  }
  return 0;
}

}  // namespace cutoff
