// SPDX-License-Identifier: Apache-2.0
//
// Curated cells with hand-derived 20-channel feature vectors.
#pragma once

#include <string>
#include <vector>

#include "sheetscan/featurize.hpp"

namespace sheetscan::testkit {

struct FeatureGolden {
  std::string name;
  Cell cell;
  PaletteRegistry palettes;
  CellFeatures expected;
};

inline std::vector<FeatureGolden> feature_goldens() {
  std::vector<FeatureGolden> out;
  const PaletteRegistry none{};
  const auto add = [&](std::string name, Cell cell, PaletteRegistry pal, CellFeatures f) {
    out.push_back({std::move(name), std::move(cell), std::move(pal), f});
  };

  {
    Cell c;
    c.value = "12.5%";
    //            ne   len        dig         let  %    .
    add("percent", c, none, {1, 5.f / 64, 3.f / 5, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "6";
    c.formula = "=SUM(A1:A3)";
    c.format.bold = true;
    c.format.border_top = true;
    c.format.border_bottom = true;
    add("formula_bold", c, none, {1, 1.f / 64, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1});
  }
  {
    Cell c;
    c.format.fill_color = "FFFF00";
    add("blank_filled", c, {ColorPalette({"FFFF00"}), {}},
        {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "Total";
    c.format.bold = true;
    c.format.font_color = "C00000";
    add("bold_label", c, {{}, ColorPalette({"C00000"})},
        {1, 5.f / 64, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "2019-03-01";
    c.data_format = "yyyy-mm-dd";
    add("date", c, none, {1, 10.f / 64, 8.f / 10, 0, 0, 0, 0, 1, 0, 10.f / 32, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "3.14159";
    c.data_format = "0.00";
    add("decimal", c, none, {1, 7.f / 64, 6.f / 7, 0, 0, 1, 1, 0, 0, 4.f / 32, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "12:30";
    c.data_format = "hh:mm";
    add("time", c, none, {1, 5.f / 64, 4.f / 5, 0, 0, 0, 0, 0, 1, 5.f / 32, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = std::string(70, 'a');
    c.data_format = "@";
    add("long_text", c, none, {1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  }
  {
    Cell c;
    c.value = "R\xC3\xA9gion";
    c.format.merged_h = true;
    c.format.border_left = true;
    c.format.border_right = true;
    add("merged_utf8", c, none, {1, 6.f / 64, 0, 5.f / 6, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0});
  }
  {
    Cell c;
    c.value = "N/A";
    c.format.fill_color = "00FF00";
    c.format.font_color = "000000";
    c.format.merged_v = true;
    add("palette", c, {ColorPalette({"FF0000", "00FF00"}), ColorPalette({"000000", "FFFFFF"})},
        {1, 3.f / 64, 0, 2.f / 3, 0, 0, 0, 0, 0, 0, 0.5f, 0.5f, 0, 0, 0, 0, 0, 0, 1, 0});
  }
  return out;
}

}  // namespace sheetscan::testkit
