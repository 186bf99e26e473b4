#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <string>

#include "tablex/document.hpp"
#include "test_support.hpp"

namespace tablex {
namespace {

using testing::occupancy_texts;
using Texts = std::vector<std::vector<std::string>>;

const Paragraph& para(const Document& d, std::size_t i) { return std::get<Paragraph>(d.blocks.at(i)); }
const TableRef& tref(const Document& d, std::size_t i) { return std::get<TableRef>(d.blocks.at(i)); }

TEST(ParseDocument, KeepsParagraphTableOrder) {
  const auto doc = parse_document("<p>A</p><table><tr><td>x</td></tr></table><p>B</p>");
  ASSERT_EQ(doc.blocks.size(), 3u);
  EXPECT_EQ(para(doc, 0).text, "A");
  EXPECT_EQ(tref(doc, 1).table_index, 0);
  EXPECT_EQ(para(doc, 2).text, "B");
  ASSERT_EQ(doc.tables.size(), 1u);
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) EXPECT_EQ(block_index_of(doc.blocks[i]), static_cast<int>(i));
}

TEST(ParseDocument, ConsecutiveTableIndices) {
  const auto doc = parse_document("<table><tr><td>a</td></tr></table><table><tr><td>b</td></tr></table>");
  ASSERT_EQ(doc.blocks.size(), 2u);
  EXPECT_EQ(tref(doc, 0).table_index, 0);
  EXPECT_EQ(tref(doc, 1).table_index, 1);
  EXPECT_EQ(doc.tables[0].at(0, 0).text, "a");
  EXPECT_EQ(doc.tables[1].at(0, 0).text, "b");
}

TEST(ParseDocument, NestedTableIsSeparateGridAfterOuter) {
  // Outer: one row, two cells; the second holds a 1-cell table.
  const auto doc = parse_document(
      "<table><tr><td>left</td><td>before <table><tr><td>inner</td></tr></table> after</td></tr></table>");
  ASSERT_EQ(doc.tables.size(), 2u);
  EXPECT_EQ(doc.tables[0].table_index(), 0);
  EXPECT_EQ(doc.tables[1].table_index(), 1);
  EXPECT_EQ(occupancy_texts(doc.tables[0]), (Texts{{"left", "before after"}}));
  EXPECT_EQ(occupancy_texts(doc.tables[1]), (Texts{{"inner"}}));
  ASSERT_EQ(doc.blocks.size(), 1u);
  EXPECT_EQ(tref(doc, 0).table_index, 0);
}

TEST(ParseDocument, TableTextNeverLeaksIntoParagraphs) {
  const auto doc = parse_document("<div>intro<table><caption>cap</caption><tr><th>h</th></tr></table>outro</div>");
  for (const auto& b : doc.blocks) {
    if (const auto* p = std::get_if<Paragraph>(&b)) {
      EXPECT_EQ(p->text.find('h'), std::string::npos);
      EXPECT_EQ(p->text.find("cap"), std::string::npos);
    }
  }
  ASSERT_EQ(doc.blocks.size(), 3u);
  EXPECT_EQ(para(doc, 0).text, "intro");
  EXPECT_EQ(para(doc, 2).text, "outro");
}

TEST(ParseDocument, InlineRunsJoinAndWhitespaceCollapses) {
  const auto doc = parse_document("<p>売<b>上</b>高\n\t は　 100&nbsp;億円</p><p>   </p><div>x<br>y</div>");
  ASSERT_EQ(doc.blocks.size(), 2u);
  EXPECT_EQ(para(doc, 0).text, "売上高 は 100 億円");
  EXPECT_EQ(para(doc, 1).text, "x y");
}

TEST(ParseDocument, LenientMarkup) {
  // Unclosed cells and rows, no tbody, stray end tags, comments and scripts.
  const auto doc = parse_document(
      "<!DOCTYPE html><body><script>var t='<table>';</script><!-- <p>no</p> -->"
      "<table><tr><td>a<td>b<tr><td>c</span></table></p><p>tail");
  ASSERT_EQ(doc.tables.size(), 1u);
  EXPECT_EQ(occupancy_texts(doc.tables[0]), (Texts{{"a", "b"}, {"c", ""}}));
  ASSERT_EQ(doc.blocks.size(), 2u);
  EXPECT_EQ(para(doc, 1).text, "tail");
}

TEST(ParseDocument, EntitiesDecoded) {
  const auto doc = parse_document("<p>A&amp;B &lt;1&gt; &#x58;&#89; &unknown; &#65;</p>");
  EXPECT_EQ(para(doc, 0).text, "A&B <1> XY &unknown; A");
}

TEST(ParseDocument, EmptyInputIsNotAnError) {
  EXPECT_TRUE(parse_document("").blocks.empty());
  EXPECT_TRUE(parse_document("<html><body></body></html>").blocks.empty());
}

TEST(ParseDocument, EncodingDetection) {
  // "売上" in Shift_JIS and EUC-JP.
  const std::string sjis = "\x94\x84\x8f\xe3";
  const std::string eucjp = "\xc7\xe4\xbe\xe5";
  EXPECT_EQ(para(parse_document("<meta charset=\"Shift_JIS\"><p>" + sjis + "</p>"), 0).text, "売上");
  EXPECT_EQ(para(parse_document("<meta http-equiv=\"Content-Type\" content=\"text/html; charset=euc-jp\"><p>" +
                                    eucjp + "</p>"),
                 0)
                .text,
            "売上");
  EXPECT_EQ(para(parse_document("<p>" + sjis + "</p>", "shift_jis"), 0).text, "売上");
  EXPECT_EQ(para(parse_document("\xEF\xBB\xBF<p>ok</p>"), 0).text, "ok");
  // UTF-16LE with BOM.
  std::string utf16 = "\xFF\xFE";
  for (char c : std::string("<p>hi</p>")) {
    utf16.push_back(c);
    utf16.push_back('\0');
  }
  EXPECT_EQ(para(parse_document(utf16), 0).text, "hi");
}

TEST(ParseDocument, UndecodableBytesAreUnreadable) {
  try {
    parse_document("<p>\xff\xfe\xfd broken \xc3</p>");
    FAIL() << "expected UnreadableInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreadableInput);
  }
}

TEST(ParseDocument, Deterministic) {
  const std::string html = "<p>a</p><table><tr><td rowspan=2>x</td><td>y</td></tr><tr><td>z</td></tr></table>";
  const auto a = parse_document(html);
  const auto b = parse_document(html);
  ASSERT_EQ(a.blocks.size(), b.blocks.size());
  EXPECT_EQ(occupancy_texts(a.tables[0]), occupancy_texts(b.tables[0]));
}

// ---------------------------------------------------------------------------

RawTable raw(std::initializer_list<std::initializer_list<RawCell>> rows) {
  RawTable t;
  for (const auto& r : rows) t.rows.emplace_back(r);
  return t;
}

TEST(NormalizeGrid, RowspanFillsDown) {
  const auto g = normalize_grid(raw({{{"A", 2, 1}, {"B", 1, 1}}, {{"C", 1, 1}}}), 0);
  EXPECT_EQ(g.n_rows(), 2);
  EXPECT_EQ(g.n_cols(), 2);
  EXPECT_EQ(occupancy_texts(g), (Texts{{"A", "B"}, {"A", "C"}}));
  EXPECT_EQ(g.at(1, 0).id, (CellId{0, 0, 0}));
  EXPECT_EQ(g.at(1, 1).id.str(), "t0-r1-c1");
}

TEST(NormalizeGrid, ColspanFillsRight) {
  const auto g = normalize_grid(raw({{{"A", 1, 2}}, {{"B", 1, 1}, {"C", 1, 1}}}), 0);
  EXPECT_EQ(occupancy_texts(g), (Texts{{"A", "A"}, {"B", "C"}}));
  EXPECT_EQ(g.cells().size(), 3u);
}

TEST(NormalizeGrid, HoleGetsSyntheticCell) {
  const auto g = normalize_grid(raw({{{"A", 1, 1}}, {{"B", 1, 1}, {"C", 1, 1}}}), 3);
  EXPECT_EQ(occupancy_texts(g), (Texts{{"A", ""}, {"B", "C"}}));
  const Cell& hole = g.at(0, 1);
  EXPECT_TRUE(hole.synthetic);
  EXPECT_EQ(hole.id.str(), "t3-r0-c1");
  EXPECT_EQ(hole.rowspan, 1);
  EXPECT_EQ(hole.colspan, 1);
}

TEST(NormalizeGrid, OverlapShiftsRight) {
  // B's colspan would cover the coordinate held by A's rowspan.
  const auto g = normalize_grid(raw({{{"x", 1, 1}, {"A", 2, 1}}, {{"B", 1, 2}}}), 0);
  EXPECT_EQ(occupancy_texts(g), (Texts{{"x", "A", "", ""}, {"", "A", "B", "B"}}));
}

TEST(NormalizeGrid, RowspanPastBottomIsClipped) {
  const auto g = normalize_grid(raw({{{"A", 5, 1}, {"B", 1, 1}}, {{"C", 1, 1}}}), 0);
  EXPECT_EQ(g.n_rows(), 2);
  EXPECT_EQ(g.at(0, 0).rowspan, 2);
}

TEST(NormalizeGrid, EmptyTableIsOneSyntheticCell) {
  const auto g = normalize_grid(RawTable{}, 0);
  EXPECT_EQ(g.n_rows(), 1);
  EXPECT_EQ(g.n_cols(), 1);
  EXPECT_TRUE(g.at(0, 0).synthetic);
}

TEST(NormalizeGrid, SpanAttributesParsedLeniently) {
  const auto doc = parse_document(
      "<table><tr><td rowspan='2' colspan=\" 2 \">A</td><td colspan=0>B</td><td rowspan=x>C</td></tr>"
      "<tr><td>D</td></tr></table>");
  EXPECT_EQ(occupancy_texts(doc.tables[0]), (Texts{{"A", "A", "B", "C"}, {"A", "A", "D", ""}}));
}

void expect_partition(const TableGrid& g) {
  long long area = 0;
  for (const auto& c : g.cells()) area += static_cast<long long>(c.rowspan) * c.colspan;
  ASSERT_EQ(area, static_cast<long long>(g.n_rows()) * g.n_cols());
  std::map<CellId, long long> seen;
  for (int r = 0; r < g.n_rows(); ++r) {
    for (int c = 0; c < g.n_cols(); ++c) {
      const Cell& cell = g.at(r, c);
      ASSERT_TRUE(cell.covers(r, c));
      ++seen[cell.id];
    }
  }
  for (const auto& c : g.cells()) {
    ASSERT_EQ(seen[c.id], static_cast<long long>(c.rowspan) * c.colspan) << c.id.str();
    ASSERT_EQ(c.id, (CellId{g.table_index(), c.origin_row, c.origin_col}));
  }
}

TEST(NormalizeGrid, RandomTablesPartitionTheGrid) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) expect_partition(normalize_grid(testing::random_raw_table(rng), i));
}

TEST(NormalizeGrid, SpanFreeRoundTripPreservesTexts) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto g = normalize_grid(testing::random_raw_table(rng), 0);
    const auto doc = parse_document(to_span_free_html(g));
    ASSERT_EQ(doc.tables.size(), 1u);
    ASSERT_EQ(occupancy_texts(doc.tables[0]), occupancy_texts(g));
  }
}

TEST(GridFromCells, RebuildsAndRejectsOverlap) {
  const auto g = normalize_grid(raw({{{"A", 2, 1}, {"B", 1, 1}}, {{"C", 1, 1}}}), 4);
  const auto rebuilt = grid_from_cells(4, g.cells());
  EXPECT_EQ(occupancy_texts(rebuilt), occupancy_texts(g));

  std::vector<Cell> bad = g.cells();
  bad[0].colspan = 2;
  EXPECT_THROW(grid_from_cells(4, bad), Error);
}

// ---------------------------------------------------------------------------

TEST(NearestPrecedingTable, SinglePreceding) {
  const auto doc = parse_document("<table><tr><td>x</td></tr></table><p>d</p>");
  EXPECT_EQ(nearest_preceding_table(doc, 1), 0);
}

TEST(NearestPrecedingTable, NearestOfTwo) {
  const auto doc =
      parse_document("<p>d</p><table><tr><td>x</td></tr></table><table><tr><td>y</td></tr></table><p>e</p>");
  EXPECT_EQ(nearest_preceding_table(doc, 3), 1);
}

TEST(NearestPrecedingTable, FallsBackToFollowingTable) {
  const auto doc = parse_document("<p>d</p><table><tr><td>x</td></tr></table>");
  EXPECT_EQ(nearest_preceding_table(doc, 0), 0);
}

TEST(NearestPrecedingTable, NoTables) {
  const auto doc = parse_document("<p>d</p>");
  EXPECT_EQ(nearest_preceding_table(doc, 0), std::nullopt);
}

TEST(NearestPrecedingTable, BadIndex) {
  const auto doc = parse_document("<table><tr><td>x</td></tr></table><p>d</p>");
  for (int bad : {-1, 2, 0}) {
    try {
      nearest_preceding_table(doc, bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadBlockIndex);
    }
  }
}

TEST(CellIdFormat, ParseRoundTrip) {
  const CellId id{12, 3, 45};
  EXPECT_EQ(id.str(), "t12-r3-c45");
  EXPECT_EQ(CellId::parse(id.str()), id);
  for (const char* bad : {"", "t1-r2", "t1-r2-c", "x1-r2-c3", "t1-r2-c3x", "t-1-r2-c3"}) EXPECT_FALSE(CellId::parse(bad)) << bad;
}

}  // namespace
}  // namespace tablex
