#pragma once

#include <string>
#include <variant>
#include <vector>

#include "tablex/adapter.hpp"
#include "tablex/naive_bayes.hpp"

namespace tablex {

struct Classification {
  std::string cell_id;
  CellLabel label = CellLabel::Data;
  LabelScores scores;
};

/// Label assigned when the adapter does not answer for an item: the
/// majority class of annotated filings.
inline constexpr CellLabel kFallbackLabel = CellLabel::Data;

using ClassifierSource = std::variant<const BaselineModel*, Adapter*>;

/// Classifies examples in input order. With an adapter, requests go out in
/// chunks of batch_size; unanswered items get (Data, uniform) and a warning.
/// Throws AdapterUnavailable if the adapter dies before answering anything,
/// ProtocolViolation on a malformed response.
inline std::vector<Classification> classify_batch(const ClassifierSource& source,
                                                  const std::vector<SerializedExample>& examples,
                                                  std::vector<std::string>* warnings = nullptr) {
  std::vector<Classification> out;
  out.reserve(examples.size());

  if (const auto* model = std::get_if<const BaselineModel*>(&source)) {
    for (const auto& ex : examples) {
      auto [label, scores] = (*model)->predict(ex);
      out.push_back({ex.cell_id, label, scores});
    }
    return out;
  }

  Adapter& adapter = *std::get<Adapter*>(source);
  const auto batch = static_cast<std::size_t>(adapter.spec().batch_size);
  std::size_t answered_total = 0;
  for (std::size_t start = 0; start < examples.size(); start += batch) {
    const std::size_t end = std::min(examples.size(), start + batch);
    std::vector<std::pair<std::string, std::string>> requests;
    for (std::size_t i = start; i < end; ++i) requests.emplace_back(examples[i].cell_id, examples[i].text);

    auto answers = adapter.exchange(requests);
    if (answered_total == 0 && answers.empty() && adapter.closed())
      throw Error(ErrorCode::AdapterUnavailable, "adapter closed the connection before answering");
    answered_total += answers.size();

    for (std::size_t i = start; i < end; ++i) {
      const auto& id = examples[i].cell_id;
      if (auto it = answers.find(id); it != answers.end()) {
        out.push_back({id, it->second.label, it->second.scores});
      } else {
        out.push_back({id, kFallbackLabel, LabelScores::uniform()});
        if (warnings) warnings->push_back("no adapter response for " + id + "; using fallback label data");
      }
    }
  }
  return out;
}

}  // namespace tablex
