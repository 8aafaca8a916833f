// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "sheetscan/error.hpp"
#include "sheetscan/grid.hpp"
#include "test_support.hpp"

using namespace sheetscan;

TEST(BBox, AreaAndIntersection) {
  EXPECT_EQ(bbox_area({1, 1, 1, 1}), 1);
  EXPECT_EQ(bbox_area({2, 3, 5, 4}), 8);
  EXPECT_EQ(intersection_area({1, 1, 4, 4}, {3, 3, 6, 6}), 4);
  EXPECT_EQ(intersection_area({1, 1, 2, 2}, {3, 3, 4, 4}), 0);
  EXPECT_FALSE(intersects({1, 1, 2, 2}, {3, 1, 4, 2}));
  EXPECT_TRUE(intersects({1, 1, 3, 2}, {3, 2, 4, 2}));
}

TEST(BBox, IntersectionMatchesCellEnumeration) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const BBox a = testkit::random_box(rng, 12, 12);
    const BBox b = testkit::random_box(rng, 12, 12);
    std::int64_t n = 0;
    for (int r = 1; r <= 12; ++r)
      for (int c = 1; c <= 12; ++c) n += a.contains(CellRef{r, c}) && b.contains(CellRef{r, c});
    ASSERT_EQ(intersection_area(a, b), n);
    ASSERT_EQ(intersects(a, b), n > 0);
  }
}

TEST(A1, ParsesRangesAndSingleCells) {
  EXPECT_EQ(bbox_from_a1("B4:K37"), (BBox{2, 4, 11, 37}));
  EXPECT_EQ(bbox_from_a1("C7"), (BBox{3, 7, 3, 7}));
  EXPECT_EQ(bbox_from_a1("AA1:AB2"), (BBox{27, 1, 28, 2}));
  EXPECT_EQ(column_letters(1), "A");
  EXPECT_EQ(column_letters(26), "Z");
  EXPECT_EQ(column_letters(27), "AA");
  EXPECT_EQ(column_letters(702), "ZZ");
  EXPECT_EQ(column_letters(703), "AAA");
}

TEST(A1, RejectsMalformedText) {
  for (const char* bad : {"", "B", "4", "B4:", ":B4", "B0", "4B", "B4:K", "B4-K5", "K5:B4"}) {
    EXPECT_THROW(bbox_from_a1(bad), ParseError) << bad;
  }
}

TEST(A1, RoundTripsRandomBoxes) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const BBox b = testkit::random_box(rng, 2000, 800);
    ASSERT_EQ(bbox_from_a1(bbox_to_a1(b)), b) << bbox_to_a1(b);
  }
}

TEST(Color, Normalizes) {
  EXPECT_EQ(normalize_color("#ff00aa"), "FF00AA");
  EXPECT_EQ(normalize_color("00Ff10"), "00FF10");
  EXPECT_THROW(normalize_color("#fff"), SchemaError);
  EXPECT_THROW(normalize_color("GG0000"), SchemaError);
}

TEST(SheetModel, BlanknessIgnoresFormatting) {
  Sheet::CellMap cells;
  cells[{1, 1}].format.bold = true;
  cells[{1, 2}].formula = "=1";
  cells[{2, 1}].value = "x";
  const Sheet s("s", 2, 2, cells);
  EXPECT_TRUE(s.is_blank(1, 1));
  EXPECT_FALSE(s.is_blank(1, 2));
  EXPECT_FALSE(s.is_blank(2, 1));
  EXPECT_TRUE(s.is_blank(2, 2));
  EXPECT_EQ(s.non_blank_count(), 2u);
  EXPECT_EQ(s.occupancy(), (std::vector<std::uint8_t>{0, 1, 1, 0}));
}

TEST(SheetModel, RejectsOutOfBoundsAndOversize) {
  Sheet::CellMap cells;
  cells[{3, 1}].value = "x";
  EXPECT_THROW(Sheet("s", 2, 2, cells), ValidationError);
  EXPECT_THROW(Sheet("s", 300, 300, {}), ValidationError);
  EXPECT_NO_THROW(Sheet("s", 300, 300, {}, 90000));
}

TEST(Annotation, RejectsOverlapAndOutOfBounds) {
  EXPECT_NO_THROW(validate_annotation({"s", {{1, 1, 2, 2}, {3, 1, 4, 2}}}, BBox{1, 1, 4, 4}));
  EXPECT_THROW(validate_annotation({"s", {{1, 1, 3, 2}, {3, 1, 4, 2}}}), ValidationError);
  EXPECT_THROW(validate_annotation({"s", {{1, 1, 5, 2}}}, BBox{1, 1, 4, 4}), ValidationError);
  EXPECT_THROW(validate_annotation({"s", {{2, 1, 1, 2}}}), ValidationError);
}

TEST(DetectionModel, MaskMustMatchBox) {
  Detection d{{1, 1, 2, 2}, 0.9, std::vector<std::uint8_t>{1, 1, 0}};
  EXPECT_THROW(validate_detection(d), ValidationError);
  d.mask = std::vector<std::uint8_t>{1, 1, 0, 1};
  EXPECT_NO_THROW(validate_detection(d));
}
