#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tablex/document.hpp"
#include "tablex/error.hpp"
#include "tablex/labels.hpp"
#include "tablex/linker.hpp"
#include "tablex/serializer.hpp"

namespace tablex {

/// SplitMix64 (Steele, Lea, Flood 2014). Pinned so seeded baselines are
/// identical on every platform:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
///   z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Unbiased draw from [0, n) by rejecting the low 2^64 mod n outputs.
  std::uint64_t uniform(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Cell classification scoring

/// Splits a possibly document-qualified key "doc/t0-r1-c2" into its table key
/// "doc/t0". Throws CorpusSchema on a malformed cell id.
inline std::string table_key_of(std::string_view cell_key) {
  const auto slash = cell_key.rfind('/');
  const std::string_view local = slash == std::string_view::npos ? cell_key : cell_key.substr(slash + 1);
  const auto id = CellId::parse(local);
  if (!id) throw Error(ErrorCode::CorpusSchema, "malformed cell id '" + std::string(cell_key) + "'");
  const std::string prefix = slash == std::string_view::npos ? "" : std::string(cell_key.substr(0, slash + 1));
  return prefix + "t" + std::to_string(id->table);
}

struct PrfCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct TdeScore {
  std::map<std::string, double> per_table;
  double macro_accuracy = 0.0;
  std::map<CellLabel, PrfCounts> per_label;
  long long missing_predictions = 0;
};

/// Per-table accuracy over gold cells, averaged without weighting. Missing
/// predictions count as wrong.
inline TdeScore eval_tde(const std::map<std::string, CellLabel>& pred, const std::map<std::string, CellLabel>& gold) {
  if (gold.empty()) throw Error(ErrorCode::EmptyGold, "gold annotation set is empty");
  std::map<std::string, std::pair<long long, long long>> tally;  // correct, total
  TdeScore score;
  for (auto l : kAllLabels) score.per_label[l] = {};
  for (const auto& [key, gold_label] : gold) {
    auto& [correct, total] = tally[table_key_of(key)];
    ++total;
    const auto it = pred.find(key);
    if (it == pred.end()) {
      ++score.missing_predictions;
      ++score.per_label[gold_label].fn;
      continue;
    }
    if (it->second == gold_label) {
      ++correct;
      ++score.per_label[gold_label].tp;
    } else {
      ++score.per_label[gold_label].fn;
      ++score.per_label[it->second].fp;
    }
  }
  double sum = 0.0;
  for (const auto& [table, counts] : tally) {
    const double acc = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    score.per_table[table] = acc;
    sum += acc;
  }
  score.macro_accuracy = sum / static_cast<double>(tally.size());
  return score;
}

// ---------------------------------------------------------------------------
// Link scoring

struct TtreScore {
  PrfCounts name;
  PrfCounts value;
  long long pred_etc = 0;
  long long gold_etc = 0;

  double name_f1() const { return name.f1(); }
  double value_f1() const { return value.f1(); }
  double total() const { return (name_f1() + value_f1()) / 2.0; }
};

/// Micro-averaged over (document, description, cell) triples for each role.
/// "etc" cells are not scored, only counted.
inline TtreScore eval_ttre(const std::vector<LinkResult>& pred, const std::vector<LinkResult>& gold) {
  using Triple = std::tuple<std::string, int, CellId>;
  const auto collect = [](const std::vector<LinkResult>& links, auto member) {
    std::set<Triple> out;
    for (const auto& l : links) {
      for (const auto& id : l.*member) out.emplace(l.doc, l.description_block_index, id);
    }
    return out;
  };
  const auto score = [](const std::set<Triple>& p, const std::set<Triple>& g) {
    PrfCounts c;
    for (const auto& t : p) (g.count(t) ? c.tp : c.fp)++;
    for (const auto& t : g) {
      if (!p.count(t)) ++c.fn;
    }
    return c;
  };

  TtreScore s;
  s.name = score(collect(pred, &LinkResult::names), collect(gold, &LinkResult::names));
  s.value = score(collect(pred, &LinkResult::values), collect(gold, &LinkResult::values));
  s.pred_etc = static_cast<long long>(collect(pred, &LinkResult::etc).size());
  s.gold_etc = static_cast<long long>(collect(gold, &LinkResult::etc).size());
  return s;
}

/// For every paragraph with a table: one uniformly drawn origin cell as Name
/// and a different one as Value (no Value for single-cell tables).
inline std::vector<LinkResult> random_baseline(const Document& doc, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LinkResult> out;
  for (const auto& block : doc.blocks) {
    const auto* para = std::get_if<Paragraph>(&block);
    if (para == nullptr) continue;
    const auto table = nearest_preceding_table(doc, para->block_index);
    if (!table) continue;
    const auto& cells = doc.tables[static_cast<std::size_t>(*table)].cells();
    LinkResult r;
    r.description_block_index = para->block_index;
    r.table_index = *table;
    const std::uint64_t n = cells.size();
    const std::uint64_t name = rng.uniform(n);
    r.names.insert(cells[name].id);
    if (n > 1) {
      std::uint64_t value = rng.uniform(n - 1);
      if (value >= name) ++value;
      r.values.insert(cells[value].id);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token-length histogram

struct Histogram {
  std::map<int, long long> bins;
  long long total_cells = 0;

  void add(int length) {
    ++bins[length];
    ++total_cells;
  }
};

inline Histogram token_histogram(const std::vector<TableGrid>& grids, const SerializerConfig& config) {
  Histogram h;
  for (const auto& grid : grids) {
    for (const auto& cell : grid.cells())
      h.add(static_cast<int>(token_spans(cell.text, config.tokenizer_mode, config.separator).size()));
  }
  return h;
}

/// One line per bin: "<length> | <bar> <count>". Bars scale to `width`.
inline std::string render_histogram(const Histogram& h, int width = 50) {
  long long peak = 0;
  for (const auto& [len, n] : h.bins) peak = std::max(peak, n);
  std::string out;
  for (const auto& [len, n] : h.bins) {
    const long long bar = peak == 0 ? 0 : (n * width + peak - 1) / peak;
    std::string label = std::to_string(len);
    if (label.size() < 4) label.insert(0, 4 - label.size(), ' ');
    out += label + " | " + std::string(static_cast<std::size_t>(bar), '#') + " " + std::to_string(n) + "\n";
  }
  return out;
}

}  // namespace tablex
