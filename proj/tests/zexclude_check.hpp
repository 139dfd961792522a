#pragma once

// Exhaustive comparison of a formula on a deletion substructure against its
// z-excluded form on the full structure, over every structure of the
// two-sorted vocabulary up to a size bound.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cutoff/encode.hpp"
#include "cutoff/structure.hpp"
#include "formula_gen.hpp"

namespace cutoff::fgen {

struct ZExcludeStats {
  uint64_t structures = 0;
  uint64_t cases = 0;       // (structure, sort, d0) with a substructure
  uint64_t comparisons = 0; // cases times formulas
  uint64_t mismatches = 0;
  std::string first_mismatch;
};

namespace detail {

// Cells of every slot concatenated in slot order with their radices.
inline std::vector<int64_t> radices(const Structure& s) {
  std::vector<int64_t> out;
  const auto& sig = s.signature();
  for (size_t slot = 0; slot < sig.slot_count(); ++slot) {
    const auto& info = sig.info(static_cast<int>(slot));
    int64_t r = info.relation ? 2 : s.size(info.result_sort);
    out.insert(out.end(), s.table(static_cast<int>(slot)).data.size(), r);
  }
  return out;
}

inline uint64_t index_of(const Structure& s) {
  uint64_t idx = 0;
  const auto& sig = s.signature();
  for (size_t slot = 0; slot < sig.slot_count(); ++slot) {
    const auto& info = sig.info(static_cast<int>(slot));
    uint64_t r = info.relation ? 2 : static_cast<uint64_t>(s.size(info.result_sort));
    for (int64_t x : s.table(static_cast<int>(slot)).data) idx = idx * r + static_cast<uint64_t>(x);
  }
  return idx;
}

inline void load(Structure& s, const std::vector<int64_t>& cells) {
  size_t at = 0;
  for (size_t slot = 0; slot < s.signature().slot_count(); ++slot)
    for (auto& x : s.table(static_cast<int>(slot)).data) x = cells[at++];
}

}  // namespace detail

inline ZExcludeStats check_z_exclusion(const std::vector<FormulaPtr>& formulas, int64_t max_size) {
  Vocabulary vocab = two_sorted_vocab();
  auto sig = std::make_shared<Signature>(vocab);
  sig->add_all({Tag::Plain});
  const std::vector<std::string> sorts{"a", "b"};

  std::vector<Compiled> plain;
  std::map<std::string, std::vector<Compiled>> excluded;
  for (const auto& f : formulas) plain.emplace_back(*sig, f, std::vector<Variable>{});
  for (const auto& sort : sorts) {
    Variable z{kDeletionVar, sort};
    for (const auto& f : formulas) excluded[sort].emplace_back(*sig, z_exclude(f, z), std::vector<Variable>{z});
  }

  ZExcludeStats stats;
  // Truth table per size pair: structure index -> one bit per formula.
  std::map<std::pair<int64_t, int64_t>, std::vector<std::vector<bool>>> truth;
  // Smaller sizes first so every substructure's row already exists.
  for (int64_t total = 2; total <= 2 * max_size; ++total) {
    for (int64_t na = 1; na <= max_size; ++na) {
      int64_t nb = total - na;
      if (nb < 1 || nb > max_size) continue;
      Structure s(sig, {na, nb});
      std::vector<int64_t> dims = detail::radices(s);
      std::vector<int64_t> cells(dims.size(), 0);
      auto& rows = truth[{na, nb}];
      do {
        detail::load(s, cells);
        ++stats.structures;
        std::vector<bool> row(formulas.size());
        for (size_t i = 0; i < formulas.size(); ++i) row[i] = plain[i].holds(s, {});
        for (size_t si = 0; si < sorts.size(); ++si) {
          if (s.size(static_cast<int>(si)) == 1) continue;  // domains stay nonempty
          for (int64_t d0 = 0; d0 < s.size(static_cast<int>(si)); ++d0) {
            auto sub = substructure(s, sorts[si], d0);
            if (!sub) continue;
            ++stats.cases;
            const auto& sub_rows = truth.at({sub->structure.size(0), sub->structure.size(1)});
            const auto& expect = sub_rows.at(detail::index_of(sub->structure));
            const int64_t param[1] = {d0};
            for (size_t i = 0; i < formulas.size(); ++i) {
              ++stats.comparisons;
              if (excluded[sorts[si]][i].holds(s, param) == expect[i]) continue;
              if (stats.mismatches++ == 0)
                stats.first_mismatch = to_string(formulas[i]) + " deleting " + sorts[si] + " " + std::to_string(d0) +
                                       " of\n" + describe(s);
            }
          }
        }
        rows.push_back(std::move(row));
      } while (next_tuple(cells, dims));
    }
  }
  return stats;
}

}  // namespace cutoff::fgen
