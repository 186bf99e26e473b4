#pragma once

// Byte-to-UTF-8 decoding for HTML input. Candidate order: byte-order mark,
// in-document charset declaration, caller hint, then UTF-8. A candidate that
// fails to convert is skipped; if nothing converts the input is unreadable.

#include <iconv.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tablex/error.hpp"
#include "tablex/unicode.hpp"

namespace tablex::encoding {

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool is_utf8_name(std::string_view name) {
  const std::string n = lower(name);
  return n == "utf-8" || n == "utf8";
}

class IconvHandle {
 public:
  IconvHandle(const char* to, const char* from) : cd_(iconv_open(to, from)) {}
  ~IconvHandle() {
    if (ok()) iconv_close(cd_);
  }
  IconvHandle(const IconvHandle&) = delete;
  IconvHandle& operator=(const IconvHandle&) = delete;

  bool ok() const { return cd_ != reinterpret_cast<iconv_t>(-1); }
  iconv_t get() const { return cd_; }

 private:
  iconv_t cd_;
};

}  // namespace detail

/// Converts `bytes` from `charset` to UTF-8. nullopt when the charset is
/// unknown or the bytes are not valid in it.
inline std::optional<std::string> convert_to_utf8(std::string_view bytes, std::string_view charset) {
  if (detail::is_utf8_name(charset)) {
    if (!unicode::is_valid_utf8(bytes)) return std::nullopt;
    return std::string(bytes);
  }
  detail::IconvHandle cd("UTF-8", std::string(charset).c_str());
  if (!cd.ok()) return std::nullopt;

  std::string out;
  std::vector<char> in(bytes.begin(), bytes.end());
  char* in_ptr = in.data();
  std::size_t in_left = in.size();
  char buffer[4096];
  while (in_left > 0) {
    char* out_ptr = buffer;
    std::size_t out_left = sizeof(buffer);
    const std::size_t rc = iconv(cd.get(), &in_ptr, &in_left, &out_ptr, &out_left);
    out.append(buffer, sizeof(buffer) - out_left);
    if (rc == static_cast<std::size_t>(-1) && errno != E2BIG) return std::nullopt;
  }
  char* out_ptr = buffer;
  std::size_t out_left = sizeof(buffer);
  iconv(cd.get(), nullptr, nullptr, &out_ptr, &out_left);
  out.append(buffer, sizeof(buffer) - out_left);
  return out;
}

/// Charset named by a BOM; sets `bom_length`.
inline std::optional<std::string> sniff_bom(std::string_view bytes, std::size_t& bom_length) {
  const auto starts = [&](std::string_view prefix) { return bytes.substr(0, prefix.size()) == prefix; };
  if (starts("\xEF\xBB\xBF")) {
    bom_length = 3;
    return "UTF-8";
  }
  if (starts("\xFF\xFE")) {
    bom_length = 2;
    return "UTF-16LE";
  }
  if (starts("\xFE\xFF")) {
    bom_length = 2;
    return "UTF-16BE";
  }
  bom_length = 0;
  return std::nullopt;
}

/// First `charset=` declaration within the leading 4 KiB (covers both the
/// HTML5 `<meta charset>` form and the http-equiv content form).
inline std::optional<std::string> sniff_declared_charset(std::string_view bytes) {
  const std::string head = detail::lower(bytes.substr(0, 4096));
  std::size_t pos = 0;
  while ((pos = head.find("charset", pos)) != std::string::npos) {
    pos += 7;
    std::size_t i = pos;
    while (i < head.size() && std::isspace(static_cast<unsigned char>(head[i]))) ++i;
    if (i >= head.size() || head[i] != '=') continue;
    ++i;
    while (i < head.size() && (std::isspace(static_cast<unsigned char>(head[i])) || head[i] == '"' || head[i] == '\''))
      ++i;
    std::size_t end = i;
    while (end < head.size() && (std::isalnum(static_cast<unsigned char>(head[end])) || head[end] == '-' ||
                                 head[end] == '_' || head[end] == '.' || head[end] == ':'))
      ++end;
    if (end > i) return head.substr(i, end - i);
  }
  return std::nullopt;
}

/// Decodes raw HTML bytes to UTF-8 following the candidate order above.
/// Throws UnreadableInput when no candidate converts cleanly.
inline std::string decode_html_bytes(std::string_view bytes, std::optional<std::string_view> hint = std::nullopt) {
  std::size_t bom_length = 0;
  if (auto bom = sniff_bom(bytes, bom_length)) {
    if (auto text = convert_to_utf8(bytes.substr(bom_length), *bom)) return *text;
    throw Error(ErrorCode::UnreadableInput, "bytes do not match the " + *bom + " byte-order mark");
  }

  std::vector<std::string> candidates;
  if (auto declared = sniff_declared_charset(bytes)) candidates.push_back(*declared);
  if (hint && !hint->empty()) candidates.emplace_back(*hint);
  candidates.emplace_back("UTF-8");

  for (const auto& charset : candidates) {
    if (auto text = convert_to_utf8(bytes, charset)) return *text;
  }
  throw Error(ErrorCode::UnreadableInput, "input is not decodable as any of the candidate encodings");
}

}  // namespace tablex::encoding
