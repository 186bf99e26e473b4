#pragma once

// Classification input for one cell: the cell text, then its whole row, with
// a separator token between segments. Sequences longer than max_tokens are
// cut from the right.

#include <string>
#include <string_view>
#include <vector>

#include "tablex/document.hpp"
#include "tablex/error.hpp"
#include "tablex/unicode.hpp"

namespace tablex {

enum class TokenizerMode { Char, Whitespace };

struct SerializerConfig {
  int max_tokens = 128;
  std::string separator = "[SEP]";
  TokenizerMode tokenizer_mode = TokenizerMode::Char;

  void validate() const {
    if (max_tokens < 1) throw Error(ErrorCode::Config, "max_tokens must be >= 1");
    if (separator.empty()) throw Error(ErrorCode::Config, "separator must be non-empty");
    for (char32_t c : unicode::to_u32(separator)) {
      if (unicode::is_space(c)) throw Error(ErrorCode::Config, "separator must not contain whitespace");
    }
  }
};

struct SerializedExample {
  std::string cell_id;
  std::string text;
  int token_count = 0;
};

/// A token with its byte range in the source string.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Token boundaries. Occurrences of `separator` are located first and always
/// form one token; the text between them is split per character (Char) or
/// per non-whitespace run (Whitespace).
inline std::vector<TokenSpan> token_spans(std::string_view text, TokenizerMode mode,
                                          std::string_view separator = "[SEP]") {
  std::vector<TokenSpan> out;
  const auto split_plain = [&](std::size_t from, std::size_t to) {
    std::size_t pos = from;
    std::size_t run_start = std::string_view::npos;
    while (pos < to) {
      const std::size_t at = pos;
      auto cp = unicode::decode_one(text.substr(0, to), pos);
      if (!cp) {
        pos = at + 1;
        cp = U'�';
      }
      const bool space = unicode::is_space(*cp);
      if (mode == TokenizerMode::Char) {
        if (!space) out.push_back({at, pos});
        continue;
      }
      if (space) {
        if (run_start != std::string_view::npos) out.push_back({run_start, at});
        run_start = std::string_view::npos;
      } else if (run_start == std::string_view::npos) {
        run_start = at;
      }
    }
    if (run_start != std::string_view::npos) out.push_back({run_start, to});
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t hit = separator.empty() ? std::string_view::npos : text.find(separator, pos);
    if (hit == std::string_view::npos) {
      split_plain(pos, text.size());
      break;
    }
    split_plain(pos, hit);
    out.push_back({hit, hit + separator.size()});
    pos = hit + separator.size();
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode,
                                         std::string_view separator = "[SEP]") {
  std::vector<std::string> out;
  for (const auto& span : token_spans(text, mode, separator)) out.emplace_back(text.substr(span.begin, span.end - span.begin));
  return out;
}

/// Joins segments as "a [SEP] b [SEP] c"; empty segments contribute no text.
inline std::string join_segments(const std::vector<std::string_view>& segments, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) {
      if (!out.empty()) out += ' ';
      out += separator;
    }
    if (!segments[i].empty()) {
      if (!out.empty()) out += ' ';
      out += segments[i];
    }
  }
  return out;
}

/// Keeps at most `max_tokens` tokens, cutting after the last kept token.
inline SerializedExample truncate_example(std::string cell_id, const std::string& text, const SerializerConfig& config) {
  const auto spans = token_spans(text, config.tokenizer_mode, config.separator);
  SerializedExample ex;
  ex.cell_id = std::move(cell_id);
  if (spans.size() <= static_cast<std::size_t>(config.max_tokens)) {
    ex.text = text;
    ex.token_count = static_cast<int>(spans.size());
  } else {
    ex.text = text.substr(0, spans[static_cast<std::size_t>(config.max_tokens) - 1].end);
    ex.token_count = config.max_tokens;
  }
  return ex;
}

/// Target cell text followed by every coordinate of its row.
inline SerializedExample serialize_cell(const TableGrid& grid, int row, int col, const SerializerConfig& config) {
  const Cell& target = grid.at(row, col);
  std::vector<std::string_view> segments;
  segments.reserve(static_cast<std::size_t>(grid.n_cols()) + 1);
  segments.emplace_back(target.text);
  for (auto text : grid.row_texts(row)) segments.push_back(text);
  return truncate_example(target.id.str(), join_segments(segments, config.separator), config);
}

/// Cell text alone, without row context.
inline SerializedExample serialize_cell_only(const TableGrid& grid, int row, int col, const SerializerConfig& config) {
  const Cell& target = grid.at(row, col);
  return truncate_example(target.id.str(), target.text, config);
}

/// One example per origin cell, ordered by origin.
inline std::vector<SerializedExample> serialize_table(const TableGrid& grid, const SerializerConfig& config) {
  std::vector<SerializedExample> out;
  out.reserve(grid.cells().size());
  for (const auto& cell : grid.cells()) out.push_back(serialize_cell(grid, cell.origin_row, cell.origin_col, config));
  return out;
}

}  // namespace tablex
