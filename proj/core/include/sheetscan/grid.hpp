// SPDX-License-Identifier: Apache-2.0
//
// Core data model: cells, sheets, boxes, labels and detections. Coordinates
// are 1-based and inclusive on both ends, and every area is a cell count.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sheetscan {

inline constexpr std::size_t kDefaultMaxCells = 65536;

struct CellRef {
  int row = 1;
  int col = 1;

  // Row-major ordering.
  auto operator<=>(const CellRef&) const = default;
};

struct BBox {
  int col_left = 1;
  int row_top = 1;
  int col_right = 1;
  int row_bottom = 1;

  int width() const noexcept { return col_right - col_left + 1; }
  int height() const noexcept { return row_bottom - row_top + 1; }
  bool valid() const noexcept {
    return col_left >= 1 && row_top >= 1 && col_left <= col_right && row_top <= row_bottom;
  }
  bool contains(CellRef c) const noexcept {
    return c.row >= row_top && c.row <= row_bottom && c.col >= col_left && c.col <= col_right;
  }
  bool contains(const BBox& o) const noexcept {
    return o.col_left >= col_left && o.col_right <= col_right && o.row_top >= row_top &&
           o.row_bottom <= row_bottom;
  }

  auto operator<=>(const BBox&) const = default;
};

/// Cell count of the box.
std::int64_t bbox_area(const BBox& b);

/// Cell count of the overlap of two boxes (0 when disjoint).
std::int64_t intersection_area(const BBox& a, const BBox& b);
bool intersects(const BBox& a, const BBox& b);

/// Parses "B4:K37" style ranges. A single reference ("C7") yields a 1x1 box.
/// Throws ParseError naming the offending token.
BBox bbox_from_a1(std::string_view range_text);
std::string bbox_to_a1(const BBox& b);
std::string column_letters(int col);

/// Throws ValidationError unless `b` is a well-formed box.
void validate_bbox(const BBox& b);

/// Normalizes a color token to upper-case RRGGBB; accepts an optional '#'.
/// Throws SchemaError for anything that is not six hex digits.
std::string normalize_color(std::string_view token);

struct CellFormat {
  std::optional<std::string> fill_color;
  std::optional<std::string> font_color;
  bool bold = false;
  bool border_left = false;
  bool border_top = false;
  bool border_right = false;
  bool border_bottom = false;
  bool merged_h = false;
  bool merged_v = false;

  bool is_default() const noexcept;
  bool operator==(const CellFormat&) const = default;
};

struct Cell {
  std::string value;
  std::optional<std::string> data_format;
  CellFormat format;
  std::optional<std::string> formula;

  /// Formatting alone never makes a cell non-blank.
  bool is_blank() const noexcept { return value.empty() && !formula.has_value(); }
  bool operator==(const Cell&) const = default;
};

/// Sparse cell matrix. Immutable once constructed.
class Sheet {
 public:
  using CellMap = std::map<CellRef, Cell>;

  Sheet() = default;
  /// Throws ValidationError when a cell lies outside n_rows x n_cols or the
  /// grid exceeds `max_cells`.
  Sheet(std::string id, int n_rows, int n_cols, CellMap cells,
        std::size_t max_cells = kDefaultMaxCells);

  const std::string& id() const noexcept { return id_; }
  int n_rows() const noexcept { return n_rows_; }
  int n_cols() const noexcept { return n_cols_; }
  const CellMap& cells() const noexcept { return cells_; }
  BBox bounds() const noexcept { return BBox{1, 1, n_cols_, n_rows_}; }

  /// nullptr when no cell is stored at (row, col).
  const Cell* find(int row, int col) const;
  bool is_blank(int row, int col) const;
  std::size_t non_blank_count() const;

  /// Row-major n_rows*n_cols grid, 1 where the cell is non-blank.
  std::vector<std::uint8_t> occupancy() const;

  bool operator==(const Sheet&) const = default;

 private:
  std::string id_;
  int n_rows_ = 0;
  int n_cols_ = 0;
  CellMap cells_;
};

struct SheetAnnotation {
  std::string sheet_id;
  std::vector<BBox> tables;

  bool operator==(const SheetAnnotation&) const = default;
};

/// Rejects malformed boxes, overlapping pairs and, when dimensions are given,
/// boxes that leave the sheet. Throws ValidationError.
void validate_annotation(const SheetAnnotation& ann, std::optional<BBox> sheet_bounds = {});

struct Detection {
  BBox box;
  double score = 0.0;
  /// Row-major height x width grid of 0/1 when present.
  std::optional<std::vector<std::uint8_t>> mask;

  bool operator==(const Detection&) const = default;
};

void validate_detection(const Detection& d);

}  // namespace sheetscan
