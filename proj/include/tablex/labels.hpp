#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace tablex {

/// Cell role. Declaration order is the canonical order used for tie-breaks.
enum class CellLabel { Metadata = 0, Header = 1, Attribute = 2, Data = 3 };

inline constexpr std::array<CellLabel, 4> kAllLabels = {CellLabel::Metadata, CellLabel::Header, CellLabel::Attribute,
                                                        CellLabel::Data};

constexpr std::size_t label_index(CellLabel l) { return static_cast<std::size_t>(l); }

constexpr std::string_view to_string(CellLabel l) {
  switch (l) {
    case CellLabel::Metadata: return "metadata";
    case CellLabel::Header: return "header";
    case CellLabel::Attribute: return "attribute";
    case CellLabel::Data: return "data";
  }
  return "data";
}

inline std::optional<CellLabel> parse_label(std::string_view s) {
  for (auto l : kAllLabels) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

/// Probability per label, indexed by label_index.
struct LabelScores {
  std::array<double, 4> p{0.25, 0.25, 0.25, 0.25};

  double operator[](CellLabel l) const { return p[label_index(l)]; }
  double& operator[](CellLabel l) { return p[label_index(l)]; }

  static LabelScores uniform() { return {}; }

  static LabelScores one_hot(CellLabel l) {
    LabelScores s;
    s.p.fill(0.0);
    s[l] = 1.0;
    return s;
  }
};

}  // namespace tablex
