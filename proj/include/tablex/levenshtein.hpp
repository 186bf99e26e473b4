#pragma once

// Unit-cost edit distance over arbitrary symbol sequences, plus a
// deterministic optimal alignment.

#include <algorithm>
#include <cstddef>
#include <ranges>
#include <vector>

namespace tablex {

/// Levenshtein distance between two random-access ranges whose elements
/// compare with ==. Two-row dynamic program, O(|a|·|b|) time.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
std::size_t levenshtein(const A& a, const B& b) {
  const std::size_t n = std::ranges::size(a);
  const std::size_t m = std::ranges::size(b);
  if (n == 0) return m;
  if (m == 0) return n;

  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    const auto& ai = a[i - 1];
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = prev[j - 1] + (ai == b[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct EditOp {
  enum class Kind { Match, Substitute, Delete, Insert };

  Kind kind = Kind::Match;
  std::size_t i = 0;  // index into a (Match, Substitute, Delete)
  std::size_t j = 0;  // index into b (Match, Substitute, Insert)

  bool operator==(const EditOp&) const = default;
};

struct Alignment {
  std::vector<EditOp> ops;

  std::size_t cost() const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [](const EditOp& op) { return op.kind != EditOp::Kind::Match; }));
  }
};

/// One optimal alignment of a onto b. Traced back from the bottom-right
/// corner; at each cell the first optimal move among Match/Substitute,
/// Delete, Insert is taken.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
Alignment backtrace(const A& a, const B& b) {
  const std::size_t n = std::ranges::size(a);
  const std::size_t m = std::ranges::size(b);
  const std::size_t w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = i;
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }

  Alignment out;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = a[i - 1] == b[j - 1];
      if (d[(i - 1) * w + j - 1] + (same ? 0 : 1) == here) {
        out.ops.push_back({same ? EditOp::Kind::Match : EditOp::Kind::Substitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && d[(i - 1) * w + j] + 1 == here) {
      out.ops.push_back({EditOp::Kind::Delete, i - 1, 0});
      --i;
      continue;
    }
    out.ops.push_back({EditOp::Kind::Insert, 0, j - 1});
    --j;
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

}  // namespace tablex
