#pragma once

// Finite structures over a tagged vocabulary and fast formula evaluation.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cutoff/folcore.hpp"

namespace cutoff {

struct SlotInfo {
  std::string symbol;
  Tag tag = Tag::Plain;
  bool relation = false;
  bool rigid = false;
  std::vector<int> arg_sorts;  // indices into Signature::sorts()
  int result_sort = -1;        // -1 for relations
};

// The symbol copies a structure interprets, each assigned a dense slot.
class Signature {
 public:
  explicit Signature(Vocabulary vocab);

  // Slot for one tagged copy of a declared symbol; idempotent.
  int add_slot(const std::string& symbol, Tag tag);
  // Adds every symbol of the vocabulary under each tag (rigid tags collapse).
  void add_all(const std::vector<Tag>& tags);
  // Adds every symbol occurrence of the formula.
  void add_used(const FormulaPtr& f);

  int find_slot(const std::string& symbol, Tag tag) const;  // -1 if absent
  int slot(const std::string& symbol, Tag tag) const;       // throws
  const SlotInfo& info(int slot) const { return slots_[slot]; }
  size_t slot_count() const { return slots_.size(); }

  const Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<Sort>& sorts() const { return vocab_.sorts(); }
  int sort_index(const std::string& name) const;  // throws IllFormed
  bool is_int_sort(int sort) const { return sorts()[sort].kind == SortKind::Integer; }

 private:
  Vocabulary vocab_;
  std::vector<SlotInfo> slots_;
  std::map<SymbolRef, int> index_;
  std::map<std::string, int> sort_index_;
};

using SignaturePtr = std::shared_ptr<const Signature>;

// Dense interpretation of one slot: relation truth values or function values,
// indexed by the row-major argument tuple.
struct Table {
  std::vector<int64_t> dims;
  std::vector<int64_t> data;

  size_t offset(std::span<const int64_t> args) const;
};

// A finite structure: elements of sort s are 0..size(s)-1. The integer sort
// is the interpreted carrier; quantifiers over it range over [-window, window].
class Structure {
 public:
  Structure(SignaturePtr sig, std::vector<int64_t> sizes, int64_t int_window = 3);

  const Signature& signature() const { return *sig_; }
  const SignaturePtr& signature_ptr() const { return sig_; }
  int64_t size(int sort) const { return sizes_[sort]; }
  int64_t size(const std::string& sort) const { return sizes_[sig_->sort_index(sort)]; }
  const std::vector<int64_t>& sizes() const { return sizes_; }
  int64_t int_window() const { return int_window_; }

  const Table& table(int slot) const { return tables_[slot]; }
  Table& table(int slot) { return tables_[slot]; }
  int64_t get(int slot, std::span<const int64_t> args) const;
  void set(int slot, std::span<const int64_t> args, int64_t value);
  int64_t get(const std::string& symbol, Tag tag, std::vector<int64_t> args = {}) const;
  void set(const std::string& symbol, Tag tag, std::vector<int64_t> args, int64_t value);

  // Every table entry lies within its result domain (or window for ints).
  bool well_formed() const;

  bool operator==(const Structure& other) const;

 private:
  SignaturePtr sig_;
  std::vector<int64_t> sizes_;
  int64_t int_window_;
  std::vector<Table> tables_;
};

// Iterate all tuples over the given dimension sizes in row-major order.
// Returns false once no tuples remain. An empty dims list has one tuple.
bool next_tuple(std::vector<int64_t>& tuple, const std::vector<int64_t>& dims);

// Human-readable listing of the tables whose tag is in `tags` (all if empty).
std::string describe(const Structure& s, const std::vector<Tag>& tags = {});

using Assignment = std::map<Variable, int64_t>;

// A formula or term compiled against a signature with a fixed parameter list.
class Compiled {
 public:
  Compiled(const Signature& sig, const FormulaPtr& f, const std::vector<Variable>& params);
  Compiled(const Signature& sig, const TermPtr& t, const std::vector<Variable>& params);

  bool holds(const Structure& s, std::span<const int64_t> params) const;
  int64_t value(const Structure& s, std::span<const int64_t> params) const;
  // Kleene evaluation while tables are being filled: cells of `slot` at
  // offsets >= `known` and every slot flagged in `unknown` are unassigned.
  struct Partial {
    int slot = -1;
    size_t known = 0;
    const std::vector<bool>* unknown = nullptr;
  };
  enum Truth : uint8_t { False3 = 0, True3 = 1, Unknown3 = 2 };
  Truth holds3(const Structure& s, std::span<const int64_t> params, const Partial& partial) const;
  // True when some integer quantifier is evaluated over the window only.
  bool window_relative() const { return window_relative_; }

  struct Node {
    enum Op : uint8_t {
      True, False, Eq, Pred, Less, LessEq, Not, And, Or, Implies, Iff, Forall, Exists,
      Var, App, Int, Add, Sub, Ite
    };
    Op op = True;
    int slot = -1;
    int var = -1;   // frame index (Var, quantifiers)
    int sort = -1;  // quantifier sort
    int64_t value = 0;
    int first = 0;  // into kids_
    int count = 0;
  };

 private:
  std::vector<Node> nodes_;
  std::vector<int> kids_;
  int root_ = 0;
  int frame_size_ = 0;
  size_t param_count_ = 0;
  bool window_relative_ = false;

  friend struct CompileState;
  friend struct EvalState;
  friend struct Eval3State;
};

bool eval(const Structure& s, const Assignment& assignment, const FormulaPtr& f);
int64_t eval_term(const Structure& s, const Assignment& assignment, const TermPtr& t);

struct Substructure {
  Structure structure;
  std::vector<int64_t> kept;  // new element id -> original element id
};

// Remove one element of a sort. nullopt when some function maps a surviving
// tuple to the removed element. Sorts other than `sort` are untouched.
std::optional<Substructure> substructure(const Structure& s, const std::string& sort, int64_t removed);

}  // namespace cutoff
