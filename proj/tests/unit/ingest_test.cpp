// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "sheetscan/error.hpp"
#include "sheetscan/ingest.hpp"
#include "test_support.hpp"

using namespace sheetscan;

namespace {

Sheet random_sheet(Rng& rng, const std::string& id) {
  const int rows = static_cast<int>(rng.uniform_int(1, 20));
  const int cols = static_cast<int>(rng.uniform_int(1, 20));
  Sheet::CellMap cells;
  const char* colors[] = {"FF0000", "00FF00", "0000FF", "ABCDEF"};
  for (int r = 1; r <= rows; ++r) {
    for (int c = 1; c <= cols; ++c) {
      if (!rng.bernoulli(0.4)) continue;
      Cell& cell = cells[{r, c}];
      if (rng.bernoulli(0.8)) cell.value = std::to_string(rng.uniform_int(-500, 5000)) + (rng.bernoulli(0.2) ? "\"qé," : "");
      if (rng.bernoulli(0.2)) cell.data_format = "0.00%";
      if (rng.bernoulli(0.1)) cell.formula = "=SUM(A1:A3)";
      if (rng.bernoulli(0.3)) cell.format.fill_color = colors[rng.uniform_int(0, 3)];
      if (rng.bernoulli(0.2)) cell.format.font_color = colors[rng.uniform_int(0, 3)];
      cell.format.bold = rng.bernoulli(0.2);
      cell.format.border_left = rng.bernoulli(0.3);
      cell.format.border_top = rng.bernoulli(0.3);
      cell.format.border_right = rng.bernoulli(0.3);
      cell.format.border_bottom = rng.bernoulli(0.3);
      cell.format.merged_h = rng.bernoulli(0.05);
      cell.format.merged_v = rng.bernoulli(0.05);
    }
  }
  return Sheet(id, rows, cols, std::move(cells));
}

}  // namespace

TEST(SheetJson, RoundTripsBitExactly) {
  Rng rng(42);
  for (int t = 0; t < 100; ++t) {
    const Sheet s = random_sheet(rng, "s" + std::to_string(t));
    const std::string bytes = write_sheet(s);
    const Sheet back = read_sheet(bytes, SheetFormat::json);
    ASSERT_EQ(back, s);
    ASSERT_EQ(write_sheet(back), bytes);
  }
}

TEST(SheetJson, DefaultsAndSchemaErrors) {
  const Sheet s = read_sheet(R"({"id":"a","n_rows":2,"n_cols":2,"cells":[{"row":1,"col":2,"value":"x"}]})",
                             SheetFormat::json);
  EXPECT_EQ(s.find(1, 2)->value, "x");
  EXPECT_TRUE(s.find(1, 2)->format.is_default());
  EXPECT_EQ(s.find(2, 2), nullptr);

  EXPECT_THROW(read_sheet("{", SheetFormat::json), SchemaError);
  EXPECT_THROW(read_sheet(R"({"id":"a","n_rows":"2","n_cols":2,"cells":[]})", SheetFormat::json), SchemaError);
  EXPECT_THROW(read_sheet(R"({"id":"a","n_rows":2,"n_cols":2})", SheetFormat::json), SchemaError);
  EXPECT_THROW(read_sheet(R"({"id":"a","n_rows":2,"n_cols":2,"cells":[{"row":3,"col":1,"value":"x"}]})",
                          SheetFormat::json),
               ValidationError);
}

TEST(SheetCsv, InfersDimensionsAndQuoting) {
  const Sheet s = read_sheet("a,b,\n1,\"x,y\",3\n\"he said \"\"hi\"\"\"\n", SheetFormat::csv, "c");
  EXPECT_EQ(s.id(), "c");
  EXPECT_EQ(s.n_rows(), 3);
  EXPECT_EQ(s.n_cols(), 3);
  EXPECT_EQ(s.find(2, 2)->value, "x,y");
  EXPECT_EQ(s.find(3, 1)->value, "he said \"hi\"");
  EXPECT_TRUE(s.is_blank(1, 3));
}

TEST(Labels, RoundTripSortedAndValidated) {
  const std::vector<SheetAnnotation> labels{{"b", {{1, 1, 2, 2}}}, {"a", {{2, 2, 3, 3}, {5, 1, 6, 1}}}};
  const std::string bytes = write_labels(labels);
  const auto back = read_labels(bytes);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].sheet_id, "a");
  EXPECT_EQ(back[1], labels[0]);
  EXPECT_EQ(write_labels(back), bytes);

  const std::map<std::string, BBox> bounds{{"a", {1, 1, 6, 3}}};
  EXPECT_THROW(read_labels(bytes, &bounds), ValidationError);
  EXPECT_THROW(read_labels(R"([{"sheet":"a","tables":[[1,1,2]]}])"), SchemaError);
  EXPECT_THROW(read_labels(R"([{"sheet":"a","tables":[[1,1,3,3],[2,2,4,4]]}])"), ValidationError);
}

TEST(Detections, RleRoundTrip) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rng.uniform_int(1, 60)));
    for (auto& m : mask) m = rng.bernoulli(0.5) ? 1 : 0;
    const auto runs = mask_to_rle(mask);
    ASSERT_EQ(mask_from_rle(runs, mask.size()), mask);
  }
  EXPECT_EQ(mask_to_rle({1, 1, 0}), (std::vector<int>{0, 2, 1}));
  EXPECT_THROW(mask_from_rle({0, 2}, 3), SchemaError);
}

TEST(Detections, JsonRoundTrip) {
  DetectionMap m;
  m["s1"] = {{{1, 1, 2, 2}, 0.875, std::vector<std::uint8_t>{1, 0, 0, 1}}, {{4, 4, 4, 4}, 0.1, std::nullopt}};
  m["s0"] = {};
  const std::string bytes = write_detections(m);
  EXPECT_EQ(read_detections(bytes), m);
  EXPECT_EQ(write_detections(read_detections(bytes)), bytes);
  EXPECT_THROW(read_detections(R"({"s":[{"box":[1,1,2,2],"score":1.5}]})"), ValidationError);
}

TEST(CorpusDir, SaveLoadAndAlign) {
  const auto dir = testkit::temp_dir("corpus");
  Rng rng(9);
  std::vector<Sheet> sheets{random_sheet(rng, "b"), random_sheet(rng, "a")};
  std::vector<SheetAnnotation> labels{{"a", {}}, {"b", {{1, 1, 1, 1}}}};
  save_corpus_dir(dir, sheets, labels);
  const auto loaded = load_corpus_dir(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0], sheets[1]);
  EXPECT_EQ(loaded[1], sheets[0]);
  const auto aligned = align_labels(loaded, read_labels(read_file(dir / "labels.json")));
  EXPECT_EQ(aligned[0].sheet_id, "a");
  EXPECT_THROW(align_labels(loaded, {{"a", {}}}), ValidationError);
  EXPECT_THROW(read_file(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}
