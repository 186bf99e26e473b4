#pragma once

// Rule-based linking of description sentences to table cells.
//
// A description is cut into fragments at brackets and particles. Cells in the
// header region (top rows, left columns) whose text is close enough to some
// fragment become Names. Values are the cells where a row-key Name's row
// crosses a column-key Name's column; with only one orientation, the Name's
// whole row or column is taken instead. Candidates that are not mostly digits
// go to the "etc" bucket.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tablex/document.hpp"
#include "tablex/levenshtein.hpp"
#include "tablex/unicode.hpp"

namespace tablex {

struct LinkerConfig {
  double name_similarity_threshold = 0.70;
  double numeric_ratio_threshold = 0.50;
  int header_rows = 2;
  int header_cols = 2;
  std::vector<std::string> particles{"は", "が", "を", "に", "の", "で", "と", "へ", "から", "まで", "より"};
  std::vector<std::pair<std::string, std::string>> bracket_pairs{
      {"（", "）"}, {"(", ")"}, {"「", "」"}, {"『", "』"}, {"［", "］"}, {"[", "]"}};

  void validate() const {
    const auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(name_similarity_threshold) || !in_unit(numeric_ratio_threshold))
      throw Error(ErrorCode::Config, "linker thresholds must lie in (0, 1]");
    if (header_rows < 1 || header_cols < 1) throw Error(ErrorCode::Config, "header_rows and header_cols must be >= 1");
    for (const auto& p : particles) {
      if (p.empty()) throw Error(ErrorCode::Config, "empty particle");
    }
    for (const auto& [open, close] : bracket_pairs) {
      if (open.empty() || close.empty()) throw Error(ErrorCode::Config, "empty bracket");
    }
  }
};

struct Fragment {
  std::string text;
  std::size_t begin = 0;  // character offsets into the description
  std::size_t end = 0;
};

using CellSet = std::set<CellId>;

struct LinkResult {
  int description_block_index = 0;
  int table_index = 0;
  CellSet names;
  CellSet values;
  CellSet etc;
  std::string doc;  // optional corpus-level document key

  bool operator==(const LinkResult&) const = default;
};

namespace detail {

inline bool starts_with_at(const std::u32string& s, std::size_t pos, const std::u32string& needle) {
  return !needle.empty() && pos + needle.size() <= s.size() && s.compare(pos, needle.size(), needle) == 0;
}

/// Trims whitespace and emits the fragment if anything remains.
inline void emit_fragment(std::vector<Fragment>& out, const std::u32string& s, std::size_t begin, std::size_t end) {
  while (begin < end && unicode::is_space(s[begin])) ++begin;
  while (end > begin && unicode::is_space(s[end - 1])) --end;
  if (begin < end) out.push_back({unicode::to_utf8(s.substr(begin, end - begin)), begin, end});
}

}  // namespace detail

/// Bracketed spans become standalone fragments (brackets removed); the rest
/// is split at particles, longest particle first at each position.
inline std::vector<Fragment> segment_description(std::string_view text, const LinkerConfig& config) {
  const std::u32string s = unicode::to_u32(text);

  std::vector<std::u32string> particles;
  for (const auto& p : config.particles) particles.push_back(unicode::to_u32(p));
  std::stable_sort(particles.begin(), particles.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  std::vector<std::pair<std::u32string, std::u32string>> brackets;
  for (const auto& [open, close] : config.bracket_pairs)
    brackets.emplace_back(unicode::to_u32(open), unicode::to_u32(close));

  std::vector<Fragment> out;
  std::size_t run_start = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    bool consumed = false;
    for (const auto& [open, close] : brackets) {
      if (!detail::starts_with_at(s, pos, open)) continue;
      detail::emit_fragment(out, s, run_start, pos);
      const std::size_t inner = pos + open.size();
      const std::size_t closing = s.find(close, inner);
      if (closing == std::u32string::npos) {
        // Unbalanced opener acts as a plain delimiter.
        pos = inner;
      } else {
        detail::emit_fragment(out, s, inner, closing);
        pos = closing + close.size();
      }
      run_start = pos;
      consumed = true;
      break;
    }
    if (consumed) continue;
    for (const auto& particle : particles) {
      if (!detail::starts_with_at(s, pos, particle)) continue;
      detail::emit_fragment(out, s, run_start, pos);
      pos += particle.size();
      run_start = pos;
      consumed = true;
      break;
    }
    if (!consumed) ++pos;
  }
  detail::emit_fragment(out, s, run_start, s.size());
  return out;
}

/// 1 - distance / max(length), per character. Two empty strings score 1.
inline double similarity(std::string_view a, std::string_view b) {
  const std::u32string x = unicode::to_u32(a);
  const std::u32string y = unicode::to_u32(b);
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
}

/// Share of non-whitespace characters that are digits (ASCII or full-width).
inline double numeric_ratio(std::string_view text) {
  std::size_t digits = 0;
  std::size_t total = 0;
  for (char32_t c : unicode::to_u32(text)) {
    if (unicode::is_space(c)) continue;
    ++total;
    if (unicode::is_digit(c)) ++digits;
  }
  return total == 0 ? 0.0 : static_cast<double>(digits) / static_cast<double>(total);
}

inline bool in_candidate_region(const Cell& c, const LinkerConfig& config) {
  return c.origin_row < config.header_rows || c.origin_col < config.header_cols;
}

/// Origin cells whose rectangle touches the top header rows or left header
/// columns.
inline CellSet candidate_region(const TableGrid& grid, const LinkerConfig& config) {
  CellSet out;
  for (const auto& c : grid.cells()) {
    if (in_candidate_region(c, config)) out.insert(c.id);
  }
  return out;
}

inline CellSet find_names(const TableGrid& grid, const std::vector<Fragment>& fragments, const LinkerConfig& config) {
  CellSet out;
  for (const auto& c : grid.cells()) {
    if (c.text.empty() || !in_candidate_region(c, config)) continue;
    double best = 0.0;
    for (const auto& f : fragments) best = std::max(best, similarity(c.text, f.text));
    if (best > config.name_similarity_threshold) out.insert(c.id);
  }
  return out;
}

struct ValueCandidates {
  CellSet values;
  bool single_name_mode = false;
};

/// Row-key Names (origin in the left header columns) and column-key Names
/// (origin in the top header rows) are crossed; a spanning Name contributes
/// every row or column it covers.
inline ValueCandidates find_values(const TableGrid& grid, const CellSet& names, const LinkerConfig& config) {
  std::vector<const Cell*> row_keys;
  std::vector<const Cell*> col_keys;
  for (const auto& id : names) {
    const Cell* c = grid.find(id);
    if (c == nullptr) continue;
    if (c->origin_row < config.header_rows) col_keys.push_back(c);
    if (c->origin_col < config.header_cols) row_keys.push_back(c);
  }

  ValueCandidates out;
  const auto take = [&](int r, int col) {
    const Cell& cell = grid.at(r, col);
    if (!in_candidate_region(cell, config)) out.values.insert(cell.id);
  };

  if (!row_keys.empty() && !col_keys.empty()) {
    for (const Cell* rk : row_keys) {
      for (const Cell* ck : col_keys) {
        for (int r = rk->origin_row; r < rk->origin_row + rk->rowspan; ++r) {
          for (int c = ck->origin_col; c < ck->origin_col + ck->colspan; ++c) take(r, c);
        }
      }
    }
    return out;
  }
  if (row_keys.empty() && col_keys.empty()) return out;

  out.single_name_mode = true;
  for (const Cell* rk : row_keys) {
    for (int r = rk->origin_row; r < rk->origin_row + rk->rowspan; ++r) {
      for (int c = 0; c < grid.n_cols(); ++c) take(r, c);
    }
  }
  for (const Cell* ck : col_keys) {
    for (int c = ck->origin_col; c < ck->origin_col + ck->colspan; ++c) {
      for (int r = 0; r < grid.n_rows(); ++r) take(r, c);
    }
  }
  return out;
}

struct FilteredValues {
  CellSet values;
  CellSet etc;
};

inline FilteredValues filter_values(const TableGrid& grid, const CellSet& candidates, const LinkerConfig& config) {
  FilteredValues out;
  for (const auto& id : candidates) {
    const Cell* c = grid.find(id);
    const bool numeric =
        c != nullptr && !c->text.empty() && numeric_ratio(c->text) >= config.numeric_ratio_threshold;
    (numeric ? out.values : out.etc).insert(id);
  }
  return out;
}

/// Links one description to one table.
inline LinkResult link_description(const TableGrid& grid, int block_index, std::string_view text,
                                   const LinkerConfig& config) {
  LinkResult r;
  r.description_block_index = block_index;
  r.table_index = grid.table_index();
  const auto fragments = segment_description(text, config);
  r.names = find_names(grid, fragments, config);
  const auto candidates = find_values(grid, r.names, config);
  auto filtered = filter_values(grid, candidates.values, config);
  r.values = std::move(filtered.values);
  r.etc = std::move(filtered.etc);
  return r;
}

/// One result per paragraph that has a table to link against, in block order.
inline std::vector<LinkResult> link_document(const Document& doc, const LinkerConfig& config) {
  std::vector<LinkResult> out;
  for (const auto& block : doc.blocks) {
    const auto* para = std::get_if<Paragraph>(&block);
    if (para == nullptr) continue;
    const auto table = nearest_preceding_table(doc, para->block_index);
    if (!table) continue;
    out.push_back(link_description(doc.tables[static_cast<std::size_t>(*table)], para->block_index, para->text, config));
  }
  return out;
}

}  // namespace tablex
