// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/grid.hpp"

#include <algorithm>
#include <cctype>

#include "sheetscan/error.hpp"

namespace sheetscan {

std::int64_t bbox_area(const BBox& b) {
  return static_cast<std::int64_t>(b.width()) * static_cast<std::int64_t>(b.height());
}

std::int64_t intersection_area(const BBox& a, const BBox& b) {
  const int l = std::max(a.col_left, b.col_left);
  const int r = std::min(a.col_right, b.col_right);
  const int t = std::max(a.row_top, b.row_top);
  const int btm = std::min(a.row_bottom, b.row_bottom);
  if (l > r || t > btm) return 0;
  return static_cast<std::int64_t>(r - l + 1) * static_cast<std::int64_t>(btm - t + 1);
}

bool intersects(const BBox& a, const BBox& b) { return intersection_area(a, b) > 0; }

namespace {

struct A1Ref {
  int col;
  int row;
};

A1Ref parse_a1_ref(std::string_view tok) {
  std::size_t i = 0;
  long col = 0;
  while (i < tok.size() && std::isalpha(static_cast<unsigned char>(tok[i]))) {
    col = col * 26 + (std::toupper(static_cast<unsigned char>(tok[i])) - 'A' + 1);
    if (col > 1'000'000) throw ParseError("column out of range in '" + std::string(tok) + "'");
    ++i;
  }
  const std::size_t letters = i;
  long row = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) {
    row = row * 10 + (tok[i] - '0');
    if (row > 100'000'000) throw ParseError("row out of range in '" + std::string(tok) + "'");
    ++i;
  }
  if (letters == 0 || i == letters || i != tok.size() || row == 0) {
    throw ParseError("malformed cell reference '" + std::string(tok) + "'");
  }
  return {static_cast<int>(col), static_cast<int>(row)};
}

}  // namespace

BBox bbox_from_a1(std::string_view range_text) {
  const auto colon = range_text.find(':');
  const std::string_view first = range_text.substr(0, colon);
  const std::string_view second =
      colon == std::string_view::npos ? first : range_text.substr(colon + 1);
  if (colon != std::string_view::npos && second.find(':') != std::string_view::npos) {
    throw ParseError("malformed range '" + std::string(range_text) + "'");
  }
  const A1Ref a = parse_a1_ref(first);
  const A1Ref b = parse_a1_ref(second);
  BBox box{a.col, a.row, b.col, b.row};
  if (!box.valid()) {
    throw ParseError("range '" + std::string(range_text) + "' has its corners reversed");
  }
  return box;
}

std::string column_letters(int col) {
  std::string out;
  while (col > 0) {
    const int rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

std::string bbox_to_a1(const BBox& b) {
  return column_letters(b.col_left) + std::to_string(b.row_top) + ":" +
         column_letters(b.col_right) + std::to_string(b.row_bottom);
}

void validate_bbox(const BBox& b) {
  if (!b.valid()) {
    throw ValidationError("invalid box [" + std::to_string(b.col_left) + "," +
                          std::to_string(b.row_top) + "," + std::to_string(b.col_right) + "," +
                          std::to_string(b.row_bottom) + "]");
  }
}

std::string normalize_color(std::string_view token) {
  if (!token.empty() && token.front() == '#') token.remove_prefix(1);
  if (token.size() != 6) throw SchemaError("color '" + std::string(token) + "' is not RRGGBB");
  std::string out(token);
  for (char& ch : out) {
    if (!std::isxdigit(static_cast<unsigned char>(ch))) {
      throw SchemaError("color '" + std::string(token) + "' is not RRGGBB");
    }
    ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

bool CellFormat::is_default() const noexcept { return *this == CellFormat{}; }

Sheet::Sheet(std::string id, int n_rows, int n_cols, CellMap cells, std::size_t max_cells)
    : id_(std::move(id)), n_rows_(n_rows), n_cols_(n_cols), cells_(std::move(cells)) {
  if (n_rows_ < 1 || n_cols_ < 1) {
    throw ValidationError("sheet '" + id_ + "' must have positive dimensions");
  }
  if (static_cast<std::size_t>(n_rows_) * static_cast<std::size_t>(n_cols_) > max_cells) {
    throw ValidationError("sheet '" + id_ + "' is " + std::to_string(n_rows_) + "x" +
                          std::to_string(n_cols_) + ", above the " + std::to_string(max_cells) +
                          "-cell bound");
  }
  for (const auto& [ref, cell] : cells_) {
    if (ref.row < 1 || ref.col < 1 || ref.row > n_rows_ || ref.col > n_cols_) {
      throw ValidationError("cell (" + std::to_string(ref.row) + "," + std::to_string(ref.col) +
                            ") lies outside sheet '" + id_ + "'");
    }
    if (cell.format.fill_color) normalize_color(*cell.format.fill_color);
    if (cell.format.font_color) normalize_color(*cell.format.font_color);
  }
}

const Cell* Sheet::find(int row, int col) const {
  const auto it = cells_.find(CellRef{row, col});
  return it == cells_.end() ? nullptr : &it->second;
}

bool Sheet::is_blank(int row, int col) const {
  const Cell* c = find(row, col);
  return c == nullptr || c->is_blank();
}

std::size_t Sheet::non_blank_count() const {
  return static_cast<std::size_t>(std::count_if(
      cells_.begin(), cells_.end(), [](const auto& kv) { return !kv.second.is_blank(); }));
}

std::vector<std::uint8_t> Sheet::occupancy() const {
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(n_rows_) * n_cols_, 0);
  for (const auto& [ref, cell] : cells_) {
    if (!cell.is_blank()) {
      grid[static_cast<std::size_t>(ref.row - 1) * n_cols_ + (ref.col - 1)] = 1;
    }
  }
  return grid;
}

namespace {
std::string box_text(const BBox& b) {
  return "[" + std::to_string(b.col_left) + "," + std::to_string(b.row_top) + "," +
         std::to_string(b.col_right) + "," + std::to_string(b.row_bottom) + "]";
}
}  // namespace

void validate_annotation(const SheetAnnotation& ann, std::optional<BBox> sheet_bounds) {
  for (const BBox& b : ann.tables) {
    if (!b.valid()) {
      throw ValidationError("sheet '" + ann.sheet_id + "': invalid box " + box_text(b));
    }
    if (sheet_bounds && !sheet_bounds->contains(b)) {
      throw ValidationError("sheet '" + ann.sheet_id + "': box " + box_text(b) +
                            " lies outside the sheet");
    }
  }
  for (std::size_t i = 0; i < ann.tables.size(); ++i) {
    for (std::size_t j = i + 1; j < ann.tables.size(); ++j) {
      if (intersects(ann.tables[i], ann.tables[j])) {
        throw ValidationError("sheet '" + ann.sheet_id + "': overlapping tables " +
                              box_text(ann.tables[i]) + " and " + box_text(ann.tables[j]));
      }
    }
  }
}

void validate_detection(const Detection& d) {
  validate_bbox(d.box);
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw ValidationError("detection score outside [0,1]");
  }
  if (d.mask && d.mask->size() != static_cast<std::size_t>(bbox_area(d.box))) {
    throw ValidationError("detection mask does not match box " + box_text(d.box));
  }
}

}  // namespace sheetscan
