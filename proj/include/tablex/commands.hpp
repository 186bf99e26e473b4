#pragma once

// Command implementations behind the tablex CLI. Each returns a process exit
// code: 0 success, 2 I/O, 3 corpus schema, 4 adapter, 5 config.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tablex/classify.hpp"
#include "tablex/config.hpp"
#include "tablex/document.hpp"
#include "tablex/evaluation.hpp"
#include "tablex/json_io.hpp"
#include "tablex/linker.hpp"
#include "tablex/naive_bayes.hpp"
#include "tablex/patterns.hpp"
#include "tablex/serializer.hpp"

namespace tablex::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIo = 2,
  kCorpusSchema = 3,
  kAdapter = 4,
  kConfig = 5,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::UnreadableInput: return kIo;
    case ErrorCode::CorpusSchema:
    case ErrorCode::MissingClass:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyGold:
    case ErrorCode::EmptyPrediction: return kCorpusSchema;
    case ErrorCode::AdapterUnavailable:
    case ErrorCode::ProtocolViolation: return kAdapter;
    case ErrorCode::Config: return kConfig;
    default: return kFailure;
  }
}

struct Context {
  PipelineConfig config;
  std::string out;  // empty: standard output (file commands) or required (extract)
  std::uint64_t seed = 0;
  bool quiet = false;
  std::ostream* stdout_stream = &std::cout;
  std::ostream* stderr_stream = &std::cerr;

  std::ostream& log() const { return *stderr_stream; }
  void warn(const std::string& msg) const {
    if (!quiet) log() << "warning: " << msg << "\n";
  }
};

namespace detail {

inline void emit(const Context& ctx, const std::string& content) {
  if (ctx.out.empty()) {
    *ctx.stdout_stream << content;
  } else {
    io::write_file_atomic(ctx.out, content);
  }
}

inline bool is_html(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".html" || ext == ".htm" || ext == ".xhtml";
}

/// Expands directories to their HTML members (sorted). Missing paths are
/// reported and counted.
inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const Context& ctx, int& missing) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> members;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && is_html(entry.path())) members.push_back(entry.path());
      }
      std::sort(members.begin(), members.end());
      out.insert(out.end(), members.begin(), members.end());
    } else if (fs::is_regular_file(p, ec)) {
      out.push_back(p);
    } else {
      ctx.log() << "error: input not found: " << in << "\n";
      ++missing;
    }
  }
  return out;
}

inline std::string doc_key(const fs::path& p) { return p.stem().string(); }

inline std::optional<std::string_view> hint(const Context& ctx) {
  if (ctx.config.encoding_hint.empty()) return std::nullopt;
  return std::string_view(ctx.config.encoding_hint);
}

inline std::vector<std::string> inputs_or_config(const std::vector<std::string>& inputs, const Context& ctx) {
  return inputs.empty() ? ctx.config.paths.inputs : inputs;
}

template <typename F>
int guarded(const Context& ctx, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    ctx.log() << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    ctx.log() << "error: " << e.what() << "\n";
    return kFailure;
  }
}

inline std::vector<io::CellRecord> read_all_records(const std::vector<std::string>& paths) {
  std::vector<io::CellRecord> out;
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::Io, "input not found: " + p);
    auto records = io::read_cell_records(p);
    out.insert(out.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
  }
  return out;
}

/// Serialized examples for records in input order, ids qualified by doc.
inline std::vector<SerializedExample> serialize_records(const std::vector<io::CellRecord>& records,
                                                        const SerializerConfig& config) {
  const auto grids = io::grids_from_records(records);
  std::vector<SerializedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& grid = grids.at({r.doc, r.table_index});
    auto ex = serialize_cell(grid, r.origin_row, r.origin_col, config);
    ex.cell_id = r.key();
    out.push_back(std::move(ex));
  }
  return out;
}

inline void require_labels(const std::vector<io::CellRecord>& records) {
  for (const auto& r : records) {
    if (!r.label) throw Error(ErrorCode::CorpusSchema, "record " + r.key() + " has no label");
  }
}

/// Label rows of a labeled corpus grouped by (doc, table, origin_row) and
/// ordered by origin_col.
inline std::vector<RowPattern> label_rows(const std::vector<io::CellRecord>& records) {
  std::map<std::tuple<std::string, int, int>, std::map<int, CellLabel>> rows;
  for (const auto& r : records) rows[{r.doc, r.table_index, r.origin_row}][r.origin_col] = *r.label;
  std::vector<RowPattern> out;
  for (const auto& [key, cols] : rows) {
    RowPattern p;
    for (const auto& [col, label] : cols) p.push_back(label);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

/// Parses each HTML input into <out>/<stem>.document.json and
/// <out>/<stem>.cells.jsonl. Undecodable files are warned about and skipped.
inline int cmd_extract(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    const std::string out_dir = ctx.out.empty() ? ctx.config.paths.out : ctx.out;
    if (out_dir.empty()) throw Error(ErrorCode::Config, "extract needs --out DIR");
    int missing = 0;
    const auto files = detail::expand_inputs(detail::inputs_or_config(inputs, ctx), ctx, missing);
    int written = 0;
    int warnings = 0;
    for (const auto& file : files) {
      Document doc;
      try {
        doc = parse_document(io::read_file(file), detail::hint(ctx));
      } catch (const Error& e) {
        ++warnings;
        ctx.warn(file.string() + ": " + e.what());
        continue;
      }
      const std::string key = detail::doc_key(file);
      io::write_file_atomic(fs::path(out_dir) / (key + ".document.json"), io::to_json(doc).dump(1) + "\n");
      std::vector<io::json> rows;
      for (const auto& r : io::cell_records(doc, key)) rows.push_back(io::to_json(r));
      io::write_file_atomic(fs::path(out_dir) / (key + ".cells.jsonl"), io::to_jsonl(rows));
      ++written;
    }
    if (!ctx.quiet) ctx.log() << "extract: " << written << " document(s) written, " << warnings << " warning(s)\n";
    if (missing > 0 || written == 0) return static_cast<int>(kIo);
    return static_cast<int>(kOk);
  });
}

/// Trains the naive Bayes baseline on labeled cell records and writes the
/// model JSON.
inline int cmd_train(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    const auto records = detail::read_all_records(detail::inputs_or_config(inputs, ctx));
    detail::require_labels(records);
    const auto examples = detail::serialize_records(records, ctx.config.serializer);
    std::vector<std::pair<SerializedExample, CellLabel>> labeled;
    for (std::size_t i = 0; i < records.size(); ++i) labeled.emplace_back(examples[i], *records[i].label);
    NgramConfig ng;
    ng.orders = ctx.config.classifier.ngram_orders;
    ng.alpha = ctx.config.classifier.alpha;
    ng.mode = ctx.config.serializer.tokenizer_mode;
    ng.separator = ctx.config.serializer.separator;
    const auto model = BaselineModel::train(labeled, ng);
    detail::emit(ctx, io::to_json(model).dump() + "\n");
    return static_cast<int>(kOk);
  });
}

inline int cmd_build_patterns(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    const auto records = detail::read_all_records(detail::inputs_or_config(inputs, ctx));
    detail::require_labels(records);
    const auto bank = build_pattern_bank(detail::label_rows(records));
    detail::emit(ctx, io::to_json(bank).dump(1) + "\n");
    return static_cast<int>(kOk);
  });
}

/// Classifies every cell record with the baseline model or the adapter.
/// Output lines follow input order.
inline int cmd_classify(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    const auto& cc = ctx.config.classifier;
    const auto paths = detail::inputs_or_config(inputs, ctx);
    for (const auto& p : paths) {
      if (!fs::is_regular_file(p)) throw Error(ErrorCode::Io, "input not found: " + p);
    }
    std::optional<BaselineModel> model;
    if (cc.mode == ClassifierMode::Baseline) {
      if (cc.model_path.empty()) throw Error(ErrorCode::Config, "baseline mode needs classifier.model_path");
      if (!fs::is_regular_file(cc.model_path)) throw Error(ErrorCode::Io, "model not found: " + cc.model_path);
      io::json j;
      try {
        j = io::json::parse(io::read_file(cc.model_path));
      } catch (const io::json::exception& e) {
        throw Error(ErrorCode::CorpusSchema, "model file is not valid JSON: " + std::string(e.what()));
      }
      model = io::model_from_json(j, cc.model_path);
    } else {
      cc.adapter.validate();
    }

    const auto records = detail::read_all_records(paths);
    const auto examples = detail::serialize_records(records, ctx.config.serializer);

    std::vector<std::string> warnings;
    std::vector<Classification> results;
    if (model) {
      results = classify_batch(&*model, examples, &warnings);
    } else {
      Adapter adapter(cc.adapter);
      results = classify_batch(&adapter, examples, &warnings);
    }
    for (const auto& w : warnings) ctx.warn(w);

    std::vector<io::json> rows;
    for (std::size_t i = 0; i < records.size(); ++i)
      rows.push_back(io::to_json(io::Prediction{records[i].doc, records[i].cell_id, results[i].label, results[i].scores}));
    detail::emit(ctx, io::to_jsonl(rows));
    return static_cast<int>(kOk);
  });
}

/// Applies row-pattern correction to predictions; output follows input order.
inline int cmd_correct(const std::string& predictions_path, const std::string& bank_path, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    if (!fs::is_regular_file(bank_path)) throw Error(ErrorCode::Io, "pattern bank not found: " + bank_path);
    if (!fs::is_regular_file(predictions_path)) throw Error(ErrorCode::Io, "predictions not found: " + predictions_path);
    io::json bank_json;
    try {
      bank_json = io::json::parse(io::read_file(bank_path));
    } catch (const io::json::exception& e) {
      throw Error(ErrorCode::CorpusSchema, "pattern bank is not valid JSON: " + std::string(e.what()));
    }
    const PatternBank bank = io::bank_from_json(bank_json, bank_path);
    auto preds = io::read_predictions(predictions_path);

    // Row membership: (doc, table, origin_row) -> prediction indices by column.
    std::map<std::tuple<std::string, int, int>, std::map<int, std::size_t>> rows;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto id = *CellId::parse(preds[i].cell_id);
      rows[{preds[i].doc, id.table, id.row}][id.col] = i;
    }
    long long changed = 0;
    for (const auto& [key, cols] : rows) {
      RowPattern row;
      for (const auto& [col, idx] : cols) row.push_back(preds[idx].label);
      const RowPattern fixed = correct_row(row, bank);
      std::size_t k = 0;
      for (const auto& [col, idx] : cols) {
        if (preds[idx].label != fixed[k]) ++changed;
        preds[idx].label = fixed[k++];
      }
    }
    std::vector<io::json> out;
    for (const auto& p : preds) out.push_back(io::to_json(p));
    detail::emit(ctx, io::to_jsonl(out));
    if (!ctx.quiet) ctx.log() << "correct: " << changed << " label(s) changed\n";
    return static_cast<int>(kOk);
  });
}

namespace detail {

template <typename Producer>
int per_document_links(const std::vector<std::string>& inputs, const Context& ctx, Producer&& produce) {
  int missing = 0;
  const auto files = expand_inputs(inputs_or_config(inputs, ctx), ctx, missing);
  if (missing > 0) return static_cast<int>(kIo);
  std::vector<io::json> rows;
  for (const auto& file : files) {
    Document doc;
    try {
      doc = parse_document(io::read_file(file), hint(ctx));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnreadableInput) throw;
      ctx.warn(file.string() + ": " + e.what());
      continue;
    }
    for (auto& link : produce(doc)) {
      link.doc = doc_key(file);
      rows.push_back(io::to_json(link));
    }
  }
  emit(ctx, io::to_jsonl(rows));
  return static_cast<int>(kOk);
}

}  // namespace detail

inline int cmd_link(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    return detail::per_document_links(inputs, ctx, [&](const Document& d) { return link_document(d, ctx.config.linker); });
  });
}

inline int cmd_random_baseline(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    return detail::per_document_links(inputs, ctx, [&](const Document& d) { return random_baseline(d, ctx.seed); });
  });
}

enum class EvalTask { Tde, Ttre };

inline int cmd_eval(const std::string& pred_path, const std::string& gold_path, EvalTask task, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    for (const auto& p : {pred_path, gold_path}) {
      if (!fs::is_regular_file(p)) throw Error(ErrorCode::Io, "input not found: " + p);
    }
    io::json report;
    if (task == EvalTask::Tde) {
      const auto gold = io::read_label_map(gold_path);
      const auto pred = io::read_label_map(pred_path);
      const auto score = eval_tde(pred, gold);
      if (score.missing_predictions > 0)
        ctx.warn(std::to_string(score.missing_predictions) + " gold cell(s) have no prediction; counted as wrong");
      report["tde"] = io::to_json(score);
    } else {
      report["ttre"] = io::to_json(eval_ttre(io::read_links(pred_path), io::read_links(gold_path)));
    }
    detail::emit(ctx, report.dump(1) + "\n");
    return static_cast<int>(kOk);
  });
}

/// Token-length histogram of cell texts: JSON to --out (when given), bar
/// chart to standard output.
inline int cmd_stats(const std::vector<std::string>& inputs, const Context& ctx) {
  return detail::guarded(ctx, [&] {
    const auto records = detail::read_all_records(detail::inputs_or_config(inputs, ctx));
    const auto& sc = ctx.config.serializer;
    Histogram h;
    for (const auto& r : records) h.add(static_cast<int>(token_spans(r.text, sc.tokenizer_mode, sc.separator).size()));
    if (!ctx.out.empty()) io::write_file_atomic(ctx.out, io::to_json(h).dump(1) + "\n");
    *ctx.stdout_stream << render_histogram(h);
    return static_cast<int>(kOk);
  });
}

}  // namespace tablex::cli
