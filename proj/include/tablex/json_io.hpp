#pragma once

// On-disk formats. Corpora are JSON-lines; documents, pattern banks, models
// and score reports are single JSON objects. Object keys are emitted sorted
// so repeated runs are byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tablex/classify.hpp"
#include "tablex/document.hpp"
#include "tablex/error.hpp"
#include "tablex/evaluation.hpp"
#include "tablex/labels.hpp"
#include "tablex/linker.hpp"
#include "tablex/naive_bayes.hpp"
#include "tablex/patterns.hpp"
#include "tablex/serializer.hpp"

namespace tablex::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
}

/// Parses each non-blank line as JSON. Throws CorpusSchema naming the line.
inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorpusSchema, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

inline std::string qualified(const std::string& doc, const std::string& cell_id) {
  return doc.empty() ? cell_id : doc + "/" + cell_id;
}

// ---------------------------------------------------------------------------
// Document

inline json to_json(const Cell& c) {
  json j = {{"id", c.id.str()},     {"row", c.origin_row},  {"col", c.origin_col},
            {"rowspan", c.rowspan}, {"colspan", c.colspan}, {"text", c.text}};
  if (c.synthetic) j["synthetic"] = true;
  return j;
}

inline json to_json(const TableGrid& g) {
  json cells = json::array();
  for (const auto& c : g.cells()) cells.push_back(to_json(c));
  json occupancy = json::array();
  for (int r = 0; r < g.n_rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < g.n_cols(); ++c) row.push_back(g.at(r, c).id.str());
    occupancy.push_back(std::move(row));
  }
  return {{"table_index", g.table_index()}, {"n_rows", g.n_rows()},        {"n_cols", g.n_cols()},
          {"cells", std::move(cells)},      {"occupancy", std::move(occupancy)}};
}

inline json to_json(const Document& doc) {
  json blocks = json::array();
  for (const auto& b : doc.blocks) {
    if (const auto* p = std::get_if<Paragraph>(&b)) {
      blocks.push_back({{"type", "paragraph"}, {"block_index", p->block_index}, {"text", p->text}});
    } else {
      const auto& t = std::get<TableRef>(b);
      blocks.push_back({{"type", "table"}, {"block_index", t.block_index}, {"table_index", t.table_index}});
    }
  }
  json tables = json::array();
  for (const auto& t : doc.tables) tables.push_back(to_json(t));
  return {{"blocks", std::move(blocks)}, {"tables", std::move(tables)}};
}

// ---------------------------------------------------------------------------
// Cell corpus

struct CellRecord {
  std::string doc;
  std::string cell_id;
  int table_index = 0;
  int origin_row = 0;
  int origin_col = 0;
  int rowspan = 1;
  int colspan = 1;
  std::string text;
  std::optional<CellLabel> label;

  std::string key() const { return qualified(doc, cell_id); }
};

inline json to_json(const CellRecord& r) {
  json j = {{"cell_id", r.cell_id},       {"table_index", r.table_index}, {"origin_row", r.origin_row},
            {"origin_col", r.origin_col}, {"rowspan", r.rowspan},         {"colspan", r.colspan},
            {"text", r.text}};
  if (!r.doc.empty()) j["doc"] = r.doc;
  if (r.label) j["label"] = std::string(to_string(*r.label));
  return j;
}

inline std::vector<CellRecord> cell_records(const Document& doc, const std::string& doc_key) {
  std::vector<CellRecord> out;
  for (const auto& table : doc.tables) {
    for (const auto& c : table.cells())
      out.push_back({doc_key, c.id.str(), table.table_index(), c.origin_row, c.origin_col, c.rowspan, c.colspan, c.text, {}});
  }
  return out;
}

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::CorpusSchema, where + ": missing '" + key + "'");
  return j[key];
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorpusSchema, where + ": field '" + key + "' has the wrong type");
  }
}

inline CellLabel label_field(const json& j, const std::string& where) {
  const auto s = get_as<std::string>(j, "label", where);
  const auto l = parse_label(s);
  if (!l) throw Error(ErrorCode::CorpusSchema, where + ": unknown label '" + s + "'");
  return *l;
}

}  // namespace detail

inline CellRecord cell_record_from_json(const json& j, const std::string& where) {
  CellRecord r;
  r.cell_id = detail::get_as<std::string>(j, "cell_id", where);
  const auto id = CellId::parse(r.cell_id);
  if (!id) throw Error(ErrorCode::CorpusSchema, where + ": malformed cell_id '" + r.cell_id + "'");
  r.table_index = j.contains("table_index") ? detail::get_as<int>(j, "table_index", where) : id->table;
  r.origin_row = j.contains("origin_row") ? detail::get_as<int>(j, "origin_row", where) : id->row;
  r.origin_col = j.contains("origin_col") ? detail::get_as<int>(j, "origin_col", where) : id->col;
  if (r.table_index != id->table || r.origin_row != id->row || r.origin_col != id->col)
    throw Error(ErrorCode::CorpusSchema, where + ": coordinates disagree with cell_id " + r.cell_id);
  r.rowspan = j.contains("rowspan") ? detail::get_as<int>(j, "rowspan", where) : 1;
  r.colspan = j.contains("colspan") ? detail::get_as<int>(j, "colspan", where) : 1;
  r.text = detail::get_as<std::string>(j, "text", where);
  if (j.contains("doc")) r.doc = detail::get_as<std::string>(j, "doc", where);
  if (j.contains("label") && !j["label"].is_null()) r.label = detail::label_field(j, where);
  return r;
}

inline std::vector<CellRecord> read_cell_records(const std::filesystem::path& path) {
  std::vector<CellRecord> out;
  int n = 0;
  for (const auto& j : read_jsonl(path)) out.push_back(cell_record_from_json(j, path.string() + " record " + std::to_string(++n)));
  return out;
}

/// Grids keyed by (doc, table_index), rebuilt from corpus records.
inline std::map<std::pair<std::string, int>, TableGrid> grids_from_records(const std::vector<CellRecord>& records) {
  std::map<std::pair<std::string, int>, std::vector<Cell>> grouped;
  for (const auto& r : records) {
    Cell c;
    c.id = CellId{r.table_index, r.origin_row, r.origin_col};
    c.origin_row = r.origin_row;
    c.origin_col = r.origin_col;
    c.rowspan = r.rowspan;
    c.colspan = r.colspan;
    c.text = r.text;
    grouped[{r.doc, r.table_index}].push_back(std::move(c));
  }
  std::map<std::pair<std::string, int>, TableGrid> out;
  for (auto& [key, cells] : grouped) out.emplace(key, grid_from_cells(key.second, std::move(cells)));
  return out;
}

// ---------------------------------------------------------------------------
// Predictions

struct Prediction {
  std::string doc;
  std::string cell_id;
  CellLabel label = CellLabel::Data;
  LabelScores scores;

  std::string key() const { return qualified(doc, cell_id); }
};

inline json to_json(const LabelScores& s) {
  json j = json::object();
  for (auto l : kAllLabels) j[std::string(to_string(l))] = s[l];
  return j;
}

inline json to_json(const Prediction& p) {
  json j = {{"cell_id", p.cell_id}, {"label", std::string(to_string(p.label))}, {"scores", to_json(p.scores)}};
  if (!p.doc.empty()) j["doc"] = p.doc;
  return j;
}

inline Prediction prediction_from_json(const json& j, const std::string& where) {
  Prediction p;
  p.cell_id = detail::get_as<std::string>(j, "cell_id", where);
  if (!CellId::parse(p.cell_id)) throw Error(ErrorCode::CorpusSchema, where + ": malformed cell_id '" + p.cell_id + "'");
  p.label = detail::label_field(j, where);
  if (j.contains("doc")) p.doc = detail::get_as<std::string>(j, "doc", where);
  if (j.contains("scores") && j["scores"].is_object()) {
    for (auto l : kAllLabels) {
      const std::string k(to_string(l));
      if (j["scores"].contains(k) && j["scores"][k].is_number()) p.scores[l] = j["scores"][k].get<double>();
    }
  }
  return p;
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  int n = 0;
  for (const auto& j : read_jsonl(path)) out.push_back(prediction_from_json(j, path.string() + " record " + std::to_string(++n)));
  return out;
}

/// Cell labels keyed by qualified id from either predictions or labeled
/// cell records (both carry "cell_id" and "label").
inline std::map<std::string, CellLabel> read_label_map(const std::filesystem::path& path) {
  std::map<std::string, CellLabel> out;
  int n = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path.string() + " record " + std::to_string(++n);
    const auto cell_id = detail::get_as<std::string>(j, "cell_id", where);
    const std::string doc = j.contains("doc") ? detail::get_as<std::string>(j, "doc", where) : "";
    out[qualified(doc, cell_id)] = detail::label_field(j, where);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialized examples

inline json to_json(const SerializedExample& e) {
  return {{"cell_id", e.cell_id}, {"text", e.text}, {"token_count", e.token_count}};
}

// ---------------------------------------------------------------------------
// Links

inline json ids_json(const CellSet& ids) {
  json a = json::array();
  for (const auto& id : ids) a.push_back(id.str());
  return a;
}

inline json to_json(const LinkResult& r) {
  json j = {{"desc_block", r.description_block_index},
            {"table", r.table_index},
            {"names", ids_json(r.names)},
            {"values", ids_json(r.values)},
            {"etc", ids_json(r.etc)}};
  if (!r.doc.empty()) j["doc"] = r.doc;
  return j;
}

inline LinkResult link_from_json(const json& j, const std::string& where) {
  LinkResult r;
  r.description_block_index = detail::get_as<int>(j, "desc_block", where);
  r.table_index = detail::get_as<int>(j, "table", where);
  if (j.contains("doc")) r.doc = detail::get_as<std::string>(j, "doc", where);
  const auto read_ids = [&](const char* key, CellSet& into) {
    if (!j.contains(key)) return;
    for (const auto& s : detail::get_as<std::vector<std::string>>(j, key, where)) {
      const auto id = CellId::parse(s);
      if (!id || id->table != r.table_index)
        throw Error(ErrorCode::CorpusSchema, where + ": bad cell id '" + s + "' in '" + key + "'");
      into.insert(*id);
    }
  };
  read_ids("names", r.names);
  read_ids("values", r.values);
  read_ids("etc", r.etc);
  return r;
}

inline std::vector<LinkResult> read_links(const std::filesystem::path& path) {
  std::vector<LinkResult> out;
  int n = 0;
  for (const auto& j : read_jsonl(path)) out.push_back(link_from_json(j, path.string() + " record " + std::to_string(++n)));
  return out;
}

// ---------------------------------------------------------------------------
// Pattern bank

inline json to_json(const PatternBank& bank) {
  json patterns = json::array();
  for (const auto& [pattern, freq] : bank.sorted()) {
    json labels = json::array();
    for (auto l : pattern) labels.push_back(std::string(to_string(l)));
    patterns.push_back({{"labels", std::move(labels)}, {"freq", freq}});
  }
  return {{"source_digest", bank.source_digest}, {"patterns", std::move(patterns)}};
}

inline PatternBank bank_from_json(const json& j, const std::string& where) {
  PatternBank bank;
  bank.source_digest = detail::get_as<std::string>(j, "source_digest", where);
  for (const auto& entry : detail::require(j, "patterns", where)) {
    RowPattern p;
    for (const auto& s : detail::get_as<std::vector<std::string>>(entry, "labels", where)) {
      const auto l = parse_label(s);
      if (!l) throw Error(ErrorCode::CorpusSchema, where + ": unknown label '" + s + "'");
      p.push_back(*l);
    }
    const auto freq = detail::get_as<long long>(entry, "freq", where);
    if (p.empty() || freq < 1) throw Error(ErrorCode::CorpusSchema, where + ": empty pattern or non-positive freq");
    bank.entries[p] += freq;
  }
  return bank;
}

// ---------------------------------------------------------------------------
// Baseline model

inline json to_json(const BaselineModel& m) {
  json classes = json::object();
  json features = json::object();
  for (auto l : kAllLabels) {
    const std::string name(to_string(l));
    classes[name] = m.class_counts()[label_index(l)];
    json f = json::object();
    for (const auto& [gram, n] : m.feature_counts()[label_index(l)]) f[gram] = n;
    features[name] = std::move(f);
  }
  const auto& c = m.config();
  return {{"format", "tablex-naive-bayes-v1"},
          {"ngram_orders", std::vector<int>(c.orders.begin(), c.orders.end())},
          {"alpha", c.alpha},
          {"tokenizer_mode", c.mode == TokenizerMode::Char ? "char" : "whitespace"},
          {"separator", c.separator},
          {"class_counts", std::move(classes)},
          {"feature_counts", std::move(features)}};
}

inline BaselineModel model_from_json(const json& j, const std::string& where) {
  NgramConfig c;
  const auto orders = detail::get_as<std::vector<int>>(j, "ngram_orders", where);
  c.orders = std::set<int>(orders.begin(), orders.end());
  c.alpha = detail::get_as<double>(j, "alpha", where);
  c.mode = detail::get_as<std::string>(j, "tokenizer_mode", where) == "whitespace" ? TokenizerMode::Whitespace
                                                                                   : TokenizerMode::Char;
  c.separator = detail::get_as<std::string>(j, "separator", where);
  std::array<long long, 4> classes{};
  std::array<std::map<std::string, long long>, 4> features;
  const auto& cj = detail::require(j, "class_counts", where);
  const auto& fj = detail::require(j, "feature_counts", where);
  for (auto l : kAllLabels) {
    const std::string name(to_string(l));
    classes[label_index(l)] = detail::get_as<long long>(cj, name.c_str(), where);
    if (fj.contains(name)) {
      for (const auto& [gram, n] : fj[name].items()) features[label_index(l)][gram] = n.get<long long>();
    }
  }
  return BaselineModel::from_counts(std::move(c), classes, std::move(features));
}

// ---------------------------------------------------------------------------
// Scores and histogram

inline json prf_json(const PrfCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()}};
}

inline json to_json(const TdeScore& s) {
  json per_label = json::object();
  for (const auto& [l, c] : s.per_label) per_label[std::string(to_string(l))] = prf_json(c);
  return {{"macro_accuracy", s.macro_accuracy},
          {"per_table", s.per_table},
          {"per_label", std::move(per_label)},
          {"missing_predictions", s.missing_predictions}};
}

inline json to_json(const TtreScore& s) {
  return {{"name_f1", s.name_f1()},
          {"value_f1", s.value_f1()},
          {"total", s.total()},
          {"name_precision", s.name.precision()},
          {"name_recall", s.name.recall()},
          {"value_precision", s.value.precision()},
          {"value_recall", s.value.recall()},
          {"counts", {{"name", prf_json(s.name)}, {"value", prf_json(s.value)}, {"etc", {{"pred", s.pred_etc}, {"gold", s.gold_etc}}}}}};
}

inline json to_json(const Histogram& h) {
  json bins = json::array();
  for (const auto& [len, n] : h.bins) bins.push_back({{"length", len}, {"count", n}});
  return {{"bins", std::move(bins)}, {"total_cells", h.total_cells}};
}

}  // namespace tablex::io
