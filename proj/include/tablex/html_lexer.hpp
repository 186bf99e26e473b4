#pragma once

// Lenient HTML tokenizer. Produces start tags, end tags and character data;
// comments, doctypes, processing instructions and raw-text element bodies
// (script, style, title, textarea) are consumed silently. Anything that does
// not parse as markup is treated as text.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tablex/unicode.hpp"

namespace tablex::html {

struct Token {
  enum class Kind { StartTag, EndTag, Text };

  Kind kind = Kind::Text;
  std::string name;  // lowercase tag name; empty for text
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;  // entity-decoded character data
  std::size_t offset = 0;

  std::string_view attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return v;
    }
    return {};
  }
};

namespace detail {

inline const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table = {
      {"amp", U'&'},     {"lt", U'<'},      {"gt", U'>'},      {"quot", U'"'},    {"apos", U'\''},
      {"nbsp", 0xA0},    {"yen", 0xA5},     {"copy", 0xA9},    {"reg", 0xAE},     {"times", 0xD7},
      {"divide", 0xF7},  {"minus", 0x2212}, {"ndash", 0x2013}, {"mdash", 0x2014}, {"hellip", 0x2026},
      {"middot", 0xB7},  {"laquo", 0xAB},   {"raquo", 0xBB},   {"lsquo", 0x2018}, {"rsquo", 0x2019},
      {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"ensp", 0x2002},  {"emsp", 0x2003},  {"thinsp", 0x2009},
      {"deg", 0xB0},     {"plusmn", 0xB1},  {"sect", 0xA7},    {"para", 0xB6},    {"euro", 0x20AC},
      {"pound", 0xA3},   {"cent", 0xA2},    {"triangle", 0x25B3},
  };
  return table;
}

inline bool ascii_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Replaces character references. Unknown or malformed references are kept
/// verbatim.
inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 32) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view body = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    bool ok = false;
    if (body.size() >= 2 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const std::string_view digits = body.substr(hex ? 2 : 1);
      ok = !digits.empty();
      for (char c : digits) {
        const int v = hex ? (std::isxdigit(static_cast<unsigned char>(c))
                                 ? (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (std::tolower(c) - 'a' + 10))
                                 : -1)
                          : (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : -1);
        if (v < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
      }
      if (ok && (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) cp = 0xFFFD;
    } else {
      const auto& table = detail::named_entities();
      if (auto it = table.find(body); it != table.end()) {
        cp = it->second;
        ok = true;
      }
    }
    if (!ok) {
      out.push_back(s[i++]);
      continue;
    }
    unicode::append_utf8(out, cp);
    i = semi + 1;
  }
  return out;
}

/// Tokenizes a whole UTF-8 document.
inline std::vector<Token> tokenize(std::string_view src) {
  using detail::ascii_alpha;
  using detail::ascii_space;

  std::vector<Token> tokens;
  std::string pending_text;
  std::size_t text_offset = 0;

  const auto flush_text = [&] {
    if (pending_text.empty()) return;
    Token t;
    t.kind = Token::Kind::Text;
    t.text = decode_entities(pending_text);
    t.offset = text_offset;
    tokens.push_back(std::move(t));
    pending_text.clear();
  };
  const auto add_text = [&](std::size_t at, std::string_view chunk) {
    if (pending_text.empty()) text_offset = at;
    pending_text.append(chunk);
  };

  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    if (src[i] != '<') {
      const std::size_t next = src.find('<', i);
      const std::size_t end = next == std::string_view::npos ? n : next;
      add_text(i, src.substr(i, end - i));
      i = end;
      continue;
    }

    // Comment.
    if (src.substr(i, 4) == "<!--") {
      const std::size_t end = src.find("-->", i + 4);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    // Doctype, CDATA, processing instruction.
    if (i + 1 < n && (src[i + 1] == '!' || src[i + 1] == '?')) {
      const std::size_t end = src.find('>', i + 2);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }

    const bool is_end = i + 1 < n && src[i + 1] == '/';
    const std::size_t name_start = i + (is_end ? 2 : 1);
    if (name_start >= n || !ascii_alpha(src[name_start])) {
      add_text(i, "<");
      ++i;
      continue;
    }

    std::size_t j = name_start;
    while (j < n && !ascii_space(src[j]) && src[j] != '>' && src[j] != '/') ++j;
    Token tag;
    tag.kind = is_end ? Token::Kind::EndTag : Token::Kind::StartTag;
    tag.name = detail::ascii_lower(src.substr(name_start, j - name_start));
    tag.offset = i;

    // Attributes.
    while (j < n && src[j] != '>') {
      if (ascii_space(src[j]) || src[j] == '/') {
        ++j;
        continue;
      }
      const std::size_t key_start = j;
      while (j < n && !ascii_space(src[j]) && src[j] != '>' && src[j] != '=' && src[j] != '/') ++j;
      std::string key = detail::ascii_lower(src.substr(key_start, j - key_start));
      while (j < n && ascii_space(src[j])) ++j;
      std::string value;
      if (j < n && src[j] == '=') {
        ++j;
        while (j < n && ascii_space(src[j])) ++j;
        if (j < n && (src[j] == '"' || src[j] == '\'')) {
          const char quote = src[j];
          const std::size_t close = src.find(quote, j + 1);
          const std::size_t end = close == std::string_view::npos ? n : close;
          value = decode_entities(src.substr(j + 1, end - j - 1));
          j = close == std::string_view::npos ? n : close + 1;
        } else {
          const std::size_t value_start = j;
          while (j < n && !ascii_space(src[j]) && src[j] != '>') ++j;
          value = decode_entities(src.substr(value_start, j - value_start));
        }
      }
      if (!key.empty()) tag.attributes.emplace_back(std::move(key), std::move(value));
    }
    i = j < n ? j + 1 : n;

    flush_text();
    const std::string name = tag.name;
    const bool raw_text = !is_end && (name == "script" || name == "style" || name == "title" || name == "textarea");
    tokens.push_back(std::move(tag));

    if (raw_text) {
      // Skip to the matching close tag, case-insensitively.
      const std::string closing = "</" + name;
      std::size_t k = i;
      std::size_t found = std::string_view::npos;
      while (k < n) {
        const std::size_t lt = src.find("</", k);
        if (lt == std::string_view::npos) break;
        if (detail::ascii_lower(src.substr(lt, closing.size())) == closing) {
          found = lt;
          break;
        }
        k = lt + 2;
      }
      if (found == std::string_view::npos) {
        i = n;
      } else {
        const std::size_t gt = src.find('>', found);
        i = gt == std::string_view::npos ? n : gt + 1;
      }
      Token close;
      close.kind = Token::Kind::EndTag;
      close.name = name;
      close.offset = found == std::string_view::npos ? n : found;
      tokens.push_back(std::move(close));
    }
  }
  flush_text();
  return tokens;
}

}  // namespace tablex::html
