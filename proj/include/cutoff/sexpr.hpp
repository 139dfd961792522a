#pragma once

// Minimal SMT-LIB s-expression reader.

#include <memory>
#include <string>
#include <vector>

namespace cutoff {

struct SExpr {
  bool is_list = false;
  std::string atom;  // quoted symbols keep their bars stripped
  std::vector<SExpr> items;

  bool is_atom(const std::string& s) const { return !is_list && atom == s; }
  std::string str() const;
};

// Parse every top-level expression; `;` comments are skipped. Throws
// InfrastructureError on unbalanced input.
std::vector<SExpr> parse_sexprs(const std::string& text);

// Length of the first complete top-level expression in `text` (an atom ends
// at whitespace), or 0 when more input is needed.
size_t complete_prefix(const std::string& text);

}  // namespace cutoff
