#pragma once

// Pipeline configuration, read from one JSON document. Unknown keys are
// rejected at every level.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tablex/adapter.hpp"
#include "tablex/error.hpp"
#include "tablex/linker.hpp"
#include "tablex/naive_bayes.hpp"
#include "tablex/serializer.hpp"

namespace tablex {

enum class ClassifierMode { Baseline, Adapter };

struct ClassifierConfig {
  ClassifierMode mode = ClassifierMode::Baseline;
  std::string model_path;
  AdapterSpec adapter;
  std::set<int> ngram_orders{1, 2, 3};
  double alpha = 1.0;
};

struct PathsConfig {
  std::vector<std::string> inputs;
  std::string out;
};

struct PipelineConfig {
  SerializerConfig serializer;
  LinkerConfig linker;
  ClassifierConfig classifier;
  PathsConfig paths;
  std::string encoding_hint;
};

namespace config_detail {

using nlohmann::json;

inline void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::Config, std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw Error(ErrorCode::Config, "unknown config key '" + std::string(where) + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& into, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    into = j[key].get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Config, "config key '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

inline TokenizerMode tokenizer_mode(const std::string& s) {
  if (s == "char") return TokenizerMode::Char;
  if (s == "whitespace") return TokenizerMode::Whitespace;
  throw Error(ErrorCode::Config, "tokenizer_mode must be 'char' or 'whitespace'");
}

}  // namespace config_detail

/// Parses and validates a config document. Throws Config.
inline PipelineConfig parse_config(const nlohmann::json& j) {
  using namespace config_detail;
  PipelineConfig cfg;
  only_keys(j, "config", {"serializer", "linker", "classifier", "paths", "encoding_hint"});
  read(j, "encoding_hint", cfg.encoding_hint, "config");

  if (j.contains("serializer")) {
    const auto& s = j["serializer"];
    only_keys(s, "serializer", {"max_tokens", "separator", "tokenizer_mode"});
    read(s, "max_tokens", cfg.serializer.max_tokens, "serializer");
    read(s, "separator", cfg.serializer.separator, "serializer");
    std::string mode = "char";
    read(s, "tokenizer_mode", mode, "serializer");
    cfg.serializer.tokenizer_mode = tokenizer_mode(mode);
  }

  if (j.contains("linker")) {
    const auto& l = j["linker"];
    only_keys(l, "linker",
              {"name_similarity_threshold", "numeric_ratio_threshold", "header_rows", "header_cols", "particles",
               "bracket_pairs"});
    read(l, "name_similarity_threshold", cfg.linker.name_similarity_threshold, "linker");
    read(l, "numeric_ratio_threshold", cfg.linker.numeric_ratio_threshold, "linker");
    read(l, "header_rows", cfg.linker.header_rows, "linker");
    read(l, "header_cols", cfg.linker.header_cols, "linker");
    read(l, "particles", cfg.linker.particles, "linker");
    if (l.contains("bracket_pairs")) {
      std::vector<std::vector<std::string>> pairs;
      read(l, "bracket_pairs", pairs, "linker");
      cfg.linker.bracket_pairs.clear();
      for (const auto& p : pairs) {
        if (p.size() != 2) throw Error(ErrorCode::Config, "each bracket pair needs exactly [open, close]");
        cfg.linker.bracket_pairs.emplace_back(p[0], p[1]);
      }
    }
  }

  if (j.contains("classifier")) {
    const auto& c = j["classifier"];
    only_keys(c, "classifier", {"mode", "model_path", "adapter", "ngram_orders", "alpha"});
    std::string mode = "baseline";
    read(c, "mode", mode, "classifier");
    if (mode == "baseline") {
      cfg.classifier.mode = ClassifierMode::Baseline;
    } else if (mode == "adapter") {
      cfg.classifier.mode = ClassifierMode::Adapter;
    } else {
      throw Error(ErrorCode::Config, "classifier.mode must be 'baseline' or 'adapter'");
    }
    read(c, "model_path", cfg.classifier.model_path, "classifier");
    read(c, "alpha", cfg.classifier.alpha, "classifier");
    if (c.contains("ngram_orders")) {
      std::vector<int> orders;
      read(c, "ngram_orders", orders, "classifier");
      cfg.classifier.ngram_orders = std::set<int>(orders.begin(), orders.end());
    }
    if (c.contains("adapter")) {
      const auto& a = c["adapter"];
      only_keys(a, "classifier.adapter", {"transport", "address", "timeout_ms", "batch_size"});
      std::string transport = "subprocess-stdio";
      read(a, "transport", transport, "classifier.adapter");
      if (transport == "subprocess-stdio") {
        cfg.classifier.adapter.transport = AdapterTransport::SubprocessStdio;
      } else if (transport == "tcp") {
        cfg.classifier.adapter.transport = AdapterTransport::Tcp;
      } else {
        throw Error(ErrorCode::Config, "adapter.transport must be 'subprocess-stdio' or 'tcp'");
      }
      read(a, "address", cfg.classifier.adapter.address, "classifier.adapter");
      read(a, "timeout_ms", cfg.classifier.adapter.timeout_ms, "classifier.adapter");
      read(a, "batch_size", cfg.classifier.adapter.batch_size, "classifier.adapter");
    }
  }

  if (j.contains("paths")) {
    const auto& p = j["paths"];
    only_keys(p, "paths", {"inputs", "out"});
    read(p, "inputs", cfg.paths.inputs, "paths");
    read(p, "out", cfg.paths.out, "paths");
  }

  cfg.serializer.validate();
  cfg.linker.validate();
  if (cfg.classifier.ngram_orders.empty() || *cfg.classifier.ngram_orders.begin() < 1)
    throw Error(ErrorCode::Config, "classifier.ngram_orders must hold positive integers");
  if (!(cfg.classifier.alpha > 0.0)) throw Error(ErrorCode::Config, "classifier.alpha must be positive");
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace tablex
