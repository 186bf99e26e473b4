#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "tablex/patterns.hpp"
#include "test_support.hpp"

namespace tablex {
namespace {

constexpr auto M = CellLabel::Metadata;
constexpr auto H = CellLabel::Header;
constexpr auto A = CellLabel::Attribute;
constexpr auto D = CellLabel::Data;

PatternBank bank_of(std::initializer_list<std::pair<RowPattern, long long>> entries) {
  PatternBank b;
  for (const auto& [p, f] : entries) b.entries[p] = f;
  return b;
}

TEST(BuildPatternBank, CountsDistinctRows) {
  const std::vector<RowPattern> rows{{H, D}, {H, D}, {A, D}};
  const auto bank = build_pattern_bank(rows);
  ASSERT_EQ(bank.entries.size(), 2u);
  EXPECT_EQ(bank.entries.at(RowPattern{H, D}), 2);
  EXPECT_EQ(bank.entries.at(RowPattern{A, D}), 1);
  EXPECT_EQ(bank.source_digest.rfind("fnv1a64:", 0), 0u);
}

TEST(BuildPatternBank, DuplicatesCollapse) {
  const std::vector<RowPattern> rows(5, RowPattern{M});
  const auto bank = build_pattern_bank(rows);
  ASSERT_EQ(bank.entries.size(), 1u);
  EXPECT_EQ(bank.entries.begin()->second, 5);
}

TEST(BuildPatternBank, EntryCountMatchesSetOracle) {
  std::mt19937_64 rng(5);
  std::vector<RowPattern> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(testing::random_labels(rng, 1, 5));
  const std::set<RowPattern> distinct(rows.begin(), rows.end());
  const auto bank = build_pattern_bank(rows);
  EXPECT_EQ(bank.entries.size(), distinct.size());
  long long total = 0;
  for (const auto& [p, f] : bank.entries) total += f;
  EXPECT_EQ(total, 100);
}

TEST(BuildPatternBank, DigestTracksContent) {
  const std::vector<RowPattern> a{{H, D}, {D}};
  const std::vector<RowPattern> b{{D}, {H, D}};
  EXPECT_EQ(build_pattern_bank(a).source_digest, build_pattern_bank(a).source_digest);
  EXPECT_NE(build_pattern_bank(a).source_digest, build_pattern_bank(b).source_digest);
  EXPECT_TRUE(build_pattern_bank(std::vector<RowPattern>{}).empty());
}

TEST(PatternBank, SortedByFrequencyThenLabels) {
  const auto bank = bank_of({{{D, D}, 1}, {{H, D}, 3}, {{A}, 3}, {{M, D}, 1}});
  const auto s = bank.sorted();
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].first, (RowPattern{H, D}));
  EXPECT_EQ(s[1].first, (RowPattern{A}));
  EXPECT_EQ(s[2].first, (RowPattern{M, D}));
  EXPECT_EQ(s[3].first, (RowPattern{D, D}));
}

TEST(CorrectRow, ExactMatchUnchanged) {
  EXPECT_EQ(correct_row({H, D, D, D}, bank_of({{{H, D, D, D}, 5}})), (RowPattern{H, D, D, D}));
}

TEST(CorrectRow, NearestPatternWins) {
  const auto bank = bank_of({{{H, D, D, D}, 5}, {{A, D, D, D}, 2}});
  const RowPattern pred{H, D, H, D};
  EXPECT_EQ(levenshtein(pred, RowPattern{H, D, D, D}), 1u);
  EXPECT_EQ(levenshtein(pred, RowPattern{A, D, D, D}), 2u);
  EXPECT_EQ(correct_row(pred, bank), (RowPattern{H, D, D, D}));
}

TEST(CorrectRow, LongerPredictionOnlyTakesSubstitutions) {
  const RowPattern pred{H, A, D, D, D};
  const RowPattern pattern{H, D, D, D};
  // The preferred optimal alignment deletes A rather than substituting.
  const auto al = backtrace(pred, pattern);
  for (const auto& op : al.ops) EXPECT_NE(op.kind, EditOp::Kind::Substitute);
  const auto all = oracle::all_optimal_alignments(pred, pattern);
  EXPECT_NE(std::find(all.begin(), all.end(), al.ops), all.end());
  EXPECT_EQ(correct_row(pred, bank_of({{pattern, 3}})), pred);
}

TEST(CorrectRow, ShorterPredictionKeepsLength) {
  // Traced from the end: substitute A->D twice, then insert H at the front.
  const auto out = correct_row({A, A}, bank_of({{{H, D, D}, 1}}));
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(out, (RowPattern{D, D}));
}

TEST(CorrectRow, TieBreaks) {
  const RowPattern pred{H, H};
  // Both at distance 1: higher frequency wins.
  EXPECT_EQ(correct_row(pred, bank_of({{{H, D}, 2}, {{D, H}, 5}})), (RowPattern{D, H}));
  // Equal frequency: shorter wins ({H} needs one delete, ignored -> unchanged).
  EXPECT_EQ(correct_row(pred, bank_of({{{H, D}, 2}, {{H}, 2}})), pred);
  // Equal frequency and length: lexicographic canonical form ("data,header" < "header,data").
  EXPECT_EQ(correct_row(pred, bank_of({{{H, D}, 2}, {{D, H}, 2}})), (RowPattern{D, H}));
}

TEST(CorrectRow, EmptyBankIsIdentityAndEmptyRowThrows) {
  EXPECT_EQ(correct_row({H, A}, PatternBank{}), (RowPattern{H, A}));
  try {
    correct_row({}, bank_of({{{H}, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPrediction);
  }
}

TEST(CorrectTable, OnlyOffBankRowChanges) {
  const auto bank = bank_of({{{H, H, H}, 4}, {{A, D, D}, 9}});
  const std::vector<RowPattern> rows{{H, H, H}, {A, D, H}, {A, D, D}};
  const auto out = correct_table(rows, bank);
  EXPECT_EQ(out[0], rows[0]);
  EXPECT_EQ(out[1], (RowPattern{A, D, D}));
  EXPECT_EQ(out[2], rows[2]);
  EXPECT_EQ(correct_table(rows, PatternBank{}), rows);
  EXPECT_EQ(correct_table({{H, H, H}, {A, D, D}}, bank), (std::vector<RowPattern>{{H, H, H}, {A, D, D}}));
}

TEST(CorrectRowProperties, RandomInstances) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> bank_size(0, 8);
  std::uniform_int_distribution<int> freq(1, 5);
  for (int i = 0; i < 2000; ++i) {
    PatternBank bank;
    const int k = bank_size(rng);
    for (int j = 0; j < k; ++j) bank.entries[testing::random_labels(rng, 1, 6)] += freq(rng);
    const auto pred = testing::random_labels(rng, 1, 6);
    const auto once = correct_row(pred, bank);
    ASSERT_EQ(once.size(), pred.size());
    ASSERT_EQ(correct_row(pred, bank), once);
    if (bank.contains(pred)) ASSERT_EQ(once, pred);
    if (!bank.empty()) {
      const RowPattern* target = nearest_pattern(pred, bank);
      const auto d = oracle::edit_distance_recursive(pred, *target);
      std::size_t changed = 0;
      for (std::size_t x = 0; x < pred.size(); ++x) changed += pred[x] != once[x];
      ASSERT_LE(changed, d);
      ASSERT_LE(oracle::edit_distance_recursive(once, *target), d - changed);
      for (const auto& [p, f] : bank.entries) {
        if (p.size() != pred.size()) continue;
        std::size_t diff = 0;
        for (std::size_t x = 0; x < p.size(); ++x) diff += pred[x] != once[x];
        // At most the distance to the selected (nearest) pattern, which is
        // no more than the distance to this equal-length one.
        ASSERT_LE(diff, levenshtein(pred, p));
      }
    }
  }
}

}  // namespace
}  // namespace tablex
