#pragma once

// Multinomial naive Bayes over character n-grams, the built-in cell
// classifier. The model keeps raw counts; log-probabilities are derived from
// them, so a saved model reloads to bit-identical predictions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tablex/error.hpp"
#include "tablex/labels.hpp"
#include "tablex/serializer.hpp"

namespace tablex {

struct NgramConfig {
  std::set<int> orders{1, 2, 3};
  double alpha = 1.0;
  TokenizerMode mode = TokenizerMode::Char;
  std::string separator = "[SEP]";
};

/// N-gram features of a text: contiguous runs of tokens, joined with U+0001
/// so multi-character tokens stay distinguishable.
inline std::map<std::string, int> ngram_counts(std::string_view text, const NgramConfig& config) {
  const auto tokens = tokenize(text, config.mode, config.separator);
  std::map<std::string, int> counts;
  for (int n : config.orders) {
    if (n < 1) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
        key += '\x01';
        key += tokens[i + k];
      }
      ++counts[key];
    }
  }
  return counts;
}

class BaselineModel {
 public:
  BaselineModel() = default;

  /// Trains from labeled examples. Training is order-insensitive.
  static BaselineModel train(const std::vector<std::pair<SerializedExample, CellLabel>>& examples,
                             NgramConfig config = {}) {
    if (examples.empty()) throw Error(ErrorCode::EmptyCorpus, "no training examples");
    if (!(config.alpha > 0.0)) throw Error(ErrorCode::Config, "smoothing alpha must be positive");
    BaselineModel m;
    m.config_ = std::move(config);
    for (const auto& [ex, label] : examples) {
      ++m.class_counts_[label_index(label)];
      for (const auto& [gram, n] : ngram_counts(ex.text, m.config_)) {
        m.feature_counts_[label_index(label)][gram] += n;
      }
    }
    for (auto l : kAllLabels) {
      if (m.class_counts_[label_index(l)] == 0)
        throw Error(ErrorCode::MissingClass, "no training example labeled '" + std::string(to_string(l)) + "'");
    }
    m.finalize();
    return m;
  }

  /// Rebuilds a model from stored counts.
  static BaselineModel from_counts(NgramConfig config, std::array<long long, 4> class_counts,
                                   std::array<std::map<std::string, long long>, 4> feature_counts) {
    BaselineModel m;
    m.config_ = std::move(config);
    m.class_counts_ = class_counts;
    m.feature_counts_ = std::move(feature_counts);
    for (auto l : kAllLabels) {
      if (m.class_counts_[label_index(l)] <= 0)
        throw Error(ErrorCode::MissingClass, "stored model lacks label '" + std::string(to_string(l)) + "'");
    }
    m.finalize();
    return m;
  }

  const NgramConfig& config() const { return config_; }
  const std::array<long long, 4>& class_counts() const { return class_counts_; }
  const std::array<std::map<std::string, long long>, 4>& feature_counts() const { return feature_counts_; }
  const std::set<std::string>& vocabulary() const { return vocabulary_; }

  double log_prior(CellLabel l) const { return log_prior_[label_index(l)]; }

  /// Smoothed log-likelihood of `gram` under `l`; grams outside the
  /// vocabulary share the unknown-feature likelihood.
  double log_likelihood(CellLabel l, const std::string& gram) const {
    const auto& counts = feature_counts_[label_index(l)];
    const auto it = counts.find(gram);
    const double count = (it == counts.end() || !vocabulary_.count(gram)) ? 0.0 : static_cast<double>(it->second);
    return std::log(count + config_.alpha) - log_denominator_[label_index(l)];
  }

  double log_unknown(CellLabel l) const { return std::log(config_.alpha) - log_denominator_[label_index(l)]; }

  std::array<double, 4> log_posteriors(std::string_view text) const {
    std::array<double, 4> out{};
    const auto grams = ngram_counts(text, config_);
    for (auto l : kAllLabels) {
      double s = log_prior(l);
      for (const auto& [gram, n] : grams) s += n * log_likelihood(l, gram);
      out[label_index(l)] = s;
    }
    return out;
  }

  /// Argmax label (ties go to the earlier canonical label) and the
  /// softmax-normalized posterior.
  std::pair<CellLabel, LabelScores> predict(const SerializedExample& example) const {
    const auto lp = log_posteriors(example.text);
    std::size_t best = 0;
    for (std::size_t i = 1; i < lp.size(); ++i) {
      if (lp[i] > lp[best]) best = i;
    }
    LabelScores scores;
    double total = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      scores.p[i] = std::exp(lp[i] - lp[best]);
      total += scores.p[i];
    }
    for (auto& v : scores.p) v /= total;
    return {kAllLabels[best], scores};
  }

 private:
  void finalize() {
    vocabulary_.clear();
    for (const auto& counts : feature_counts_) {
      for (const auto& [gram, n] : counts) {
        if (n > 0) vocabulary_.insert(gram);
      }
    }
    long long total_docs = 0;
    for (auto n : class_counts_) total_docs += n;
    const double v_plus_unknown = static_cast<double>(vocabulary_.size()) + 1.0;
    for (auto l : kAllLabels) {
      const std::size_t i = label_index(l);
      long long total = 0;
      for (const auto& [gram, n] : feature_counts_[i]) total += n;
      log_prior_[i] = std::log(static_cast<double>(class_counts_[i]) / static_cast<double>(total_docs));
      log_denominator_[i] = std::log(static_cast<double>(total) + config_.alpha * v_plus_unknown);
    }
  }

  NgramConfig config_;
  std::array<long long, 4> class_counts_{};
  std::array<std::map<std::string, long long>, 4> feature_counts_;
  std::set<std::string> vocabulary_;
  std::array<double, 4> log_prior_{};
  std::array<double, 4> log_denominator_{};
};

}  // namespace tablex
