// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for unit and acceptance tests.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan::testkit {

/// Sheet from a picture: one string per row, '.' or ' ' blank, anything else
/// becomes a cell holding that character.
inline Sheet sheet_from_rows(const std::string& id, const std::vector<std::string>& rows) {
  Sheet::CellMap cells;
  int w = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    w = std::max(w, static_cast<int>(rows[r].size()));
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const char ch = rows[r][c];
      if (ch == '.' || ch == ' ') continue;
      cells[{static_cast<int>(r) + 1, static_cast<int>(c) + 1}].value = std::string(1, ch);
    }
  }
  return Sheet(id, static_cast<int>(rows.size()), w, std::move(cells));
}

/// Sheet whose cells inside each box are filled; everything else is blank.
inline Sheet sheet_with_tables(const std::string& id, int rows, int cols, const std::vector<BBox>& tables) {
  Sheet::CellMap cells;
  for (const BBox& b : tables)
    for (int r = b.row_top; r <= b.row_bottom; ++r)
      for (int c = b.col_left; c <= b.col_right; ++c)
        cells[{r, c}].value = r == b.row_top ? "H" + std::to_string(c) : std::to_string(r * 7 + c);
  return Sheet(id, rows, cols, std::move(cells));
}

/// Random valid box inside a rows x cols sheet.
inline BBox random_box(Rng& rng, int rows, int cols) {
  const int c0 = static_cast<int>(rng.uniform_int(1, cols));
  const int c1 = static_cast<int>(rng.uniform_int(c0, cols));
  const int r0 = static_cast<int>(rng.uniform_int(1, rows));
  const int r1 = static_cast<int>(rng.uniform_int(r0, rows));
  return {c0, r0, c1, r1};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("sheetscan_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace sheetscan::testkit
