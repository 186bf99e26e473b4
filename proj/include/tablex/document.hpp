#pragma once

// Document model: paragraphs and tables in source order, with every table
// normalized to a rectangular grid in which each coordinate points at the
// origin cell that covers it.

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "tablex/encoding.hpp"
#include "tablex/error.hpp"
#include "tablex/html_lexer.hpp"
#include "tablex/unicode.hpp"

namespace tablex {

/// Stable cell identity: table index plus origin coordinates.
struct CellId {
  int table = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const CellId&) const = default;

  std::string str() const {
    return "t" + std::to_string(table) + "-r" + std::to_string(row) + "-c" + std::to_string(col);
  }

  /// Parses the canonical "t{i}-r{r}-c{c}" form.
  static std::optional<CellId> parse(std::string_view s) {
    CellId id;
    const auto number = [&](char tag, int& out) {
      if (s.empty() || s.front() != tag) return false;
      s.remove_prefix(1);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr == s.data() || out < 0) return false;
      s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
      return true;
    };
    const auto dash = [&] {
      if (s.empty() || s.front() != '-') return false;
      s.remove_prefix(1);
      return true;
    };
    if (number('t', id.table) && dash() && number('r', id.row) && dash() && number('c', id.col) && s.empty())
      return id;
    return std::nullopt;
  }
};

struct Cell {
  CellId id;
  int origin_row = 0;
  int origin_col = 0;
  int rowspan = 1;
  int colspan = 1;
  std::string text;
  bool synthetic = false;  // hole filler, not present in the source

  bool covers(int row, int col) const {
    return row >= origin_row && row < origin_row + rowspan && col >= origin_col && col < origin_col + colspan;
  }
};

class TableGrid {
 public:
  TableGrid() = default;
  TableGrid(int table_index, int n_rows, int n_cols, std::vector<Cell> cells, std::vector<int> occupancy)
      : table_index_(table_index),
        n_rows_(n_rows),
        n_cols_(n_cols),
        cells_(std::move(cells)),
        occupancy_(std::move(occupancy)) {}

  int table_index() const { return table_index_; }
  int n_rows() const { return n_rows_; }
  int n_cols() const { return n_cols_; }

  /// Origin cells ordered by (origin_row, origin_col).
  const std::vector<Cell>& cells() const { return cells_; }

  bool in_bounds(int row, int col) const { return row >= 0 && row < n_rows_ && col >= 0 && col < n_cols_; }

  const Cell& at(int row, int col) const {
    if (!in_bounds(row, col))
      throw Error(ErrorCode::OutOfBounds, "(" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                                              std::to_string(n_rows_) + "x" + std::to_string(n_cols_) + " grid");
    return cells_[static_cast<std::size_t>(occupancy_[static_cast<std::size_t>(row * n_cols_ + col)])];
  }

  const Cell* find(const CellId& id) const {
    if (id.table != table_index_ || !in_bounds(id.row, id.col)) return nullptr;
    const Cell& c = at(id.row, id.col);
    return c.id == id ? &c : nullptr;
  }

  /// Per-coordinate texts of one row; spanned cells repeat.
  std::vector<std::string_view> row_texts(int row) const {
    std::vector<std::string_view> out;
    out.reserve(static_cast<std::size_t>(n_cols_));
    for (int c = 0; c < n_cols_; ++c) out.emplace_back(at(row, c).text);
    return out;
  }

  /// Origin cells whose origin lies in `row`, in column order.
  std::vector<const Cell*> origin_row_cells(int row) const {
    std::vector<const Cell*> out;
    for (const auto& c : cells_) {
      if (c.origin_row == row) out.push_back(&c);
    }
    return out;
  }

 private:
  int table_index_ = 0;
  int n_rows_ = 0;
  int n_cols_ = 0;
  std::vector<Cell> cells_;
  std::vector<int> occupancy_;
};

/// A table as it appears in the markup, before span resolution.
struct RawCell {
  std::string text;
  int rowspan = 1;
  int colspan = 1;
};

struct RawTable {
  std::vector<std::vector<RawCell>> rows;
};

/// Span-waterfall normalization. Overlapping rectangles are shifted right to
/// the next free position, rowspans past the last row are clipped and holes
/// are filled with empty synthetic cells.
inline TableGrid normalize_grid(const RawTable& raw, int table_index) {
  const int n_rows = std::max<int>(1, static_cast<int>(raw.rows.size()));

  std::vector<std::vector<int>> occ(static_cast<std::size_t>(n_rows));
  const auto occupied = [&](int r, int c) {
    const auto& row = occ[static_cast<std::size_t>(r)];
    return c < static_cast<int>(row.size()) && row[static_cast<std::size_t>(c)] >= 0;
  };
  const auto mark = [&](int r, int c, int idx) {
    auto& row = occ[static_cast<std::size_t>(r)];
    if (c >= static_cast<int>(row.size())) row.resize(static_cast<std::size_t>(c) + 1, -1);
    row[static_cast<std::size_t>(c)] = idx;
  };

  std::vector<Cell> placed;
  for (int r = 0; r < static_cast<int>(raw.rows.size()); ++r) {
    int cursor = 0;
    for (const RawCell& src : raw.rows[static_cast<std::size_t>(r)]) {
      const int rowspan = std::clamp(src.rowspan, 1, n_rows - r);
      const int colspan = std::max(1, src.colspan);
      int col = cursor;
      for (;;) {
        while (occupied(r, col)) ++col;
        bool free = true;
        for (int rr = r; rr < r + rowspan && free; ++rr) {
          for (int cc = col; cc < col + colspan; ++cc) {
            if (occupied(rr, cc)) {
              free = false;
              break;
            }
          }
        }
        if (free) break;
        ++col;
      }
      const int idx = static_cast<int>(placed.size());
      for (int rr = r; rr < r + rowspan; ++rr) {
        for (int cc = col; cc < col + colspan; ++cc) mark(rr, cc, idx);
      }
      Cell cell;
      cell.id = CellId{table_index, r, col};
      cell.origin_row = r;
      cell.origin_col = col;
      cell.rowspan = rowspan;
      cell.colspan = colspan;
      cell.text = src.text;
      placed.push_back(std::move(cell));
      cursor = col + colspan;
    }
  }

  int n_cols = 1;
  for (const auto& row : occ) n_cols = std::max(n_cols, static_cast<int>(row.size()));

  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      if (occupied(r, c)) continue;
      Cell filler;
      filler.id = CellId{table_index, r, c};
      filler.origin_row = r;
      filler.origin_col = c;
      filler.synthetic = true;
      mark(r, c, static_cast<int>(placed.size()));
      placed.push_back(std::move(filler));
    }
  }

  // Reorder by origin and remap occupancy.
  std::vector<int> order(placed.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::tie(placed[a].origin_row, placed[a].origin_col) < std::tie(placed[b].origin_row, placed[b].origin_col);
  });
  std::vector<int> remap(placed.size());
  std::vector<Cell> cells;
  cells.reserve(placed.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    cells.push_back(std::move(placed[static_cast<std::size_t>(order[i])]));
  }
  std::vector<int> occupancy(static_cast<std::size_t>(n_rows * n_cols));
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      occupancy[static_cast<std::size_t>(r * n_cols + c)] =
          remap[static_cast<std::size_t>(occ[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)])];
    }
  }
  return TableGrid(table_index, n_rows, n_cols, std::move(cells), std::move(occupancy));
}

/// Rebuilds a grid from already-placed origin cells (e.g. read back from a
/// cell corpus). Uncovered coordinates get synthetic cells; overlapping
/// rectangles throw CorpusSchema.
inline TableGrid grid_from_cells(int table_index, std::vector<Cell> cells) {
  int n_rows = 1;
  int n_cols = 1;
  for (auto& c : cells) {
    if (c.origin_row < 0 || c.origin_col < 0 || c.rowspan < 1 || c.colspan < 1)
      throw Error(ErrorCode::CorpusSchema, "cell " + c.id.str() + " has invalid coordinates or spans");
    c.id = CellId{table_index, c.origin_row, c.origin_col};
    n_rows = std::max(n_rows, c.origin_row + c.rowspan);
    n_cols = std::max(n_cols, c.origin_col + c.colspan);
  }
  std::vector<int> occ(static_cast<std::size_t>(n_rows * n_cols), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    for (int r = c.origin_row; r < c.origin_row + c.rowspan; ++r) {
      for (int k = c.origin_col; k < c.origin_col + c.colspan; ++k) {
        int& slot = occ[static_cast<std::size_t>(r * n_cols + k)];
        if (slot >= 0) throw Error(ErrorCode::CorpusSchema, "cell " + c.id.str() + " overlaps another cell");
        slot = static_cast<int>(i);
      }
    }
  }
  for (int r = 0; r < n_rows; ++r) {
    for (int k = 0; k < n_cols; ++k) {
      int& slot = occ[static_cast<std::size_t>(r * n_cols + k)];
      if (slot >= 0) continue;
      Cell filler;
      filler.id = CellId{table_index, r, k};
      filler.origin_row = r;
      filler.origin_col = k;
      filler.synthetic = true;
      slot = static_cast<int>(cells.size());
      cells.push_back(std::move(filler));
    }
  }
  std::vector<int> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return cells[a].id < cells[b].id; });
  std::vector<int> remap(cells.size());
  std::vector<Cell> sorted;
  sorted.reserve(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    sorted.push_back(std::move(cells[static_cast<std::size_t>(order[i])]));
  }
  for (auto& slot : occ) slot = remap[static_cast<std::size_t>(slot)];
  return TableGrid(table_index, n_rows, n_cols, std::move(sorted), std::move(occ));
}

struct Paragraph {
  int block_index = 0;
  std::string text;
};

struct TableRef {
  int block_index = 0;
  int table_index = 0;
};

using Block = std::variant<Paragraph, TableRef>;

inline int block_index_of(const Block& b) {
  return std::visit([](const auto& v) { return v.block_index; }, b);
}

struct Document {
  std::vector<Block> blocks;
  std::vector<TableGrid> tables;
};

namespace detail {

inline bool is_block_element(std::string_view name) {
  static constexpr std::string_view kBlock[] = {
      "address", "article", "aside",  "blockquote", "body",   "center", "dd",     "details", "dialog",
      "dir",     "div",     "dl",     "dt",         "fieldset", "figcaption", "figure", "footer", "form",
      "h1",      "h2",      "h3",     "h4",         "h5",     "h6",     "head",   "header",  "hgroup",
      "hr",      "html",    "li",     "main",       "menu",   "nav",    "ol",     "p",       "pre",
      "section", "summary", "ul",     "caption",    "br",
  };
  return std::find(std::begin(kBlock), std::end(kBlock), name) != std::end(kBlock);
}

inline int parse_span(std::string_view value) {
  int v = 1;
  while (!value.empty() && unicode::is_space(static_cast<unsigned char>(value.front()))) value.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr == value.data() || v < 1) return 1;
  return std::min(v, 65534);
}

class DocumentBuilder {
 public:
  void feed(const html::Token& t) {
    using Kind = html::Token::Kind;
    if (t.kind == Kind::Text) {
      on_text(t.text);
      return;
    }
    const bool start = t.kind == Kind::StartTag;
    if (t.name == "table") {
      start ? open_table() : close_table();
    } else if (stack_.empty()) {
      if (is_block_element(t.name)) {
        if (t.name == "br") {
          paragraph_ += ' ';
        } else {
          flush_paragraph();
        }
      }
    } else if (t.name == "tr" || t.name == "thead" || t.name == "tbody" || t.name == "tfoot") {
      auto& table = stack_.back();
      close_cell(table);
      if (t.name == "tr" && start) {
        table.raw.rows.emplace_back();
        table.row_open = true;
      } else {
        table.row_open = false;
      }
    } else if (t.name == "td" || t.name == "th") {
      auto& table = stack_.back();
      close_cell(table);
      if (start) {
        if (!table.row_open) {
          table.raw.rows.emplace_back();
          table.row_open = true;
        }
        table.cell_open = true;
        table.cell = RawCell{{}, parse_span(t.attribute("rowspan")), parse_span(t.attribute("colspan"))};
      }
    } else if (is_block_element(t.name) && stack_.back().cell_open) {
      stack_.back().cell.text += ' ';
    }
  }

  Document finish() {
    while (!stack_.empty()) close_table();
    flush_paragraph();
    Document doc;
    doc.blocks = std::move(blocks_);
    doc.tables = std::move(tables_);
    return doc;
  }

 private:
  struct OpenTable {
    int index = 0;
    RawTable raw;
    RawCell cell;
    bool row_open = false;
    bool cell_open = false;
  };

  void on_text(const std::string& text) {
    if (stack_.empty()) {
      paragraph_ += text;
    } else if (stack_.back().cell_open) {
      stack_.back().cell.text += text;
    }
  }

  void flush_paragraph() {
    std::string text = unicode::normalize_space(paragraph_);
    paragraph_.clear();
    if (!text.empty()) blocks_.emplace_back(Paragraph{next_block_++, std::move(text)});
  }

  void open_table() {
    OpenTable table;
    table.index = static_cast<int>(tables_.size());
    tables_.emplace_back();
    // Nested tables get a grid but no block of their own.
    if (stack_.empty()) {
      flush_paragraph();
      blocks_.emplace_back(TableRef{next_block_++, table.index});
    }
    stack_.push_back(std::move(table));
  }

  static void close_cell(OpenTable& table) {
    if (!table.cell_open) return;
    table.cell.text = unicode::normalize_space(table.cell.text);
    table.raw.rows.back().push_back(std::move(table.cell));
    table.cell = RawCell{};
    table.cell_open = false;
  }

  void close_table() {
    if (stack_.empty()) return;
    OpenTable table = std::move(stack_.back());
    stack_.pop_back();
    close_cell(table);
    tables_[static_cast<std::size_t>(table.index)] = normalize_grid(table.raw, table.index);
  }

  std::vector<Block> blocks_;
  std::vector<TableGrid> tables_;
  std::vector<OpenTable> stack_;
  std::string paragraph_;
  int next_block_ = 0;
};

}  // namespace detail

/// Parses UTF-8 (already decoded) HTML text.
inline Document parse_html_text(std::string_view utf8_html) {
  detail::DocumentBuilder builder;
  for (const auto& token : html::tokenize(utf8_html)) builder.feed(token);
  return builder.finish();
}

/// Parses raw HTML bytes, detecting the encoding. Throws UnreadableInput.
inline Document parse_document(std::string_view html_bytes, std::optional<std::string_view> encoding_hint = {}) {
  return parse_html_text(encoding::decode_html_bytes(html_bytes, encoding_hint));
}

/// Table for a description paragraph: the closest table before it, else the
/// closest table after it.
inline std::optional<int> nearest_preceding_table(const Document& doc, int block_index) {
  if (block_index < 0 || block_index >= static_cast<int>(doc.blocks.size()))
    throw Error(ErrorCode::BadBlockIndex, "block " + std::to_string(block_index) + " out of range");
  if (!std::holds_alternative<Paragraph>(doc.blocks[static_cast<std::size_t>(block_index)]))
    throw Error(ErrorCode::BadBlockIndex, "block " + std::to_string(block_index) + " is not a paragraph");

  for (int i = block_index - 1; i >= 0; --i) {
    if (const auto* ref = std::get_if<TableRef>(&doc.blocks[static_cast<std::size_t>(i)])) return ref->table_index;
  }
  for (int i = block_index + 1; i < static_cast<int>(doc.blocks.size()); ++i) {
    if (const auto* ref = std::get_if<TableRef>(&doc.blocks[static_cast<std::size_t>(i)])) return ref->table_index;
  }
  return std::nullopt;
}

inline std::string escape_html(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Span-free rendering: one <td> per coordinate carrying its origin text.
inline std::string to_span_free_html(const TableGrid& grid) {
  std::string out = "<table>";
  for (int r = 0; r < grid.n_rows(); ++r) {
    out += "<tr>";
    for (int c = 0; c < grid.n_cols(); ++c) out += "<td>" + escape_html(grid.at(r, c).text) + "</td>";
    out += "</tr>";
  }
  out += "</table>";
  return out;
}

}  // namespace tablex
