#pragma once

// Row-pattern post-correction. Predicted labels are gathered row by row; a
// row whose label sequence was never seen in labeled data is rewritten
// toward the closest known pattern, using substitutions only so the row keeps
// its cell count.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tablex/error.hpp"
#include "tablex/labels.hpp"
#include "tablex/levenshtein.hpp"

namespace tablex {

using RowPattern = std::vector<CellLabel>;

/// Comma-joined lowercase labels, e.g. "header,data,data".
inline std::string canonical(const RowPattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ',';
    out += to_string(p[i]);
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return out;
}

struct PatternBank {
  std::map<RowPattern, long long> entries;
  std::string source_digest;

  bool empty() const { return entries.empty(); }
  bool contains(const RowPattern& p) const { return entries.count(p) > 0; }

  /// Entries by descending frequency, then canonical label order.
  std::vector<std::pair<RowPattern, long long>> sorted() const {
    std::vector<std::pair<RowPattern, long long>> out(entries.begin(), entries.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    return out;
  }
};

/// Counts every distinct row sequence. The digest is FNV-1a 64 over the
/// canonical form of each input row followed by '\n'.
template <typename Rows>
PatternBank build_pattern_bank(const Rows& rows) {
  PatternBank bank;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const RowPattern& row : rows) {
    h = fnv1a64(canonical(row) + "\n", h);
    if (row.empty()) continue;
    ++bank.entries[row];
  }
  bank.source_digest = "fnv1a64:" + hex64(h);
  return bank;
}

/// Nearest bank pattern: minimum distance, then higher frequency, then
/// shorter length, then lexicographic canonical form.
inline const RowPattern* nearest_pattern(const RowPattern& predicted, const PatternBank& bank) {
  const RowPattern* best = nullptr;
  std::tuple<std::size_t, long long, std::size_t, std::string> best_key;
  for (const auto& [pattern, freq] : bank.entries) {
    auto key = std::make_tuple(levenshtein(predicted, pattern), -freq, pattern.size(), canonical(pattern));
    if (best == nullptr || key < best_key) {
      best = &pattern;
      best_key = std::move(key);
    }
  }
  return best;
}

inline RowPattern correct_row(const RowPattern& predicted, const PatternBank& bank) {
  if (predicted.empty()) throw Error(ErrorCode::EmptyPrediction, "cannot correct an empty row");
  if (bank.empty() || bank.contains(predicted)) return predicted;
  const RowPattern* target = nearest_pattern(predicted, bank);
  RowPattern out = predicted;
  for (const auto& op : backtrace(predicted, *target).ops) {
    if (op.kind == EditOp::Kind::Substitute) out[op.i] = (*target)[op.j];
  }
  return out;
}

inline std::vector<RowPattern> correct_table(const std::vector<RowPattern>& rows, const PatternBank& bank) {
  std::vector<RowPattern> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(correct_row(row, bank));
  return out;
}

}  // namespace tablex
