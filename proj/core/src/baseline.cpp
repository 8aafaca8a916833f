// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/baseline.hpp"

#include <algorithm>
#include <set>

#include "sheetscan/error.hpp"

namespace sheetscan {
namespace {

class Occupancy {
 public:
  explicit Occupancy(const Sheet& s) : rows_(s.n_rows()), cols_(s.n_cols()), grid_(s.occupancy()) {}

  bool at(int row, int col) const {
    return grid_[static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(col - 1)] != 0;
  }

  bool any_in_row(int row, int c0, int c1) const {
    if (row < 1 || row > rows_) return false;
    for (int c = std::max(c0, 1); c <= std::min(c1, cols_); ++c)
      if (at(row, c)) return true;
    return false;
  }

  bool any_in_col(int col, int r0, int r1) const {
    if (col < 1 || col > cols_) return false;
    for (int r = std::max(r0, 1); r <= std::min(r1, rows_); ++r)
      if (at(r, col)) return true;
    return false;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_;
  int cols_;
  std::vector<std::uint8_t> grid_;
};

BBox grow(const Occupancy& occ, CellRef seed) {
  BBox b{seed.col, seed.row, seed.col, seed.row};
  bool changed = true;
  while (changed) {
    changed = false;
    if (b.row_top > 1 && occ.any_in_row(b.row_top - 1, b.col_left - 1, b.col_right + 1)) {
      --b.row_top;
      changed = true;
    }
    if (b.row_bottom < occ.rows() &&
        occ.any_in_row(b.row_bottom + 1, b.col_left - 1, b.col_right + 1)) {
      ++b.row_bottom;
      changed = true;
    }
    if (b.col_left > 1 && occ.any_in_col(b.col_left - 1, b.row_top - 1, b.row_bottom + 1)) {
      --b.col_left;
      changed = true;
    }
    if (b.col_right < occ.cols() &&
        occ.any_in_col(b.col_right + 1, b.row_top - 1, b.row_bottom + 1)) {
      ++b.col_right;
      changed = true;
    }
  }
  return b;
}

}  // namespace

BBox region_grow(const Sheet& s, CellRef seed) {
  if (!s.bounds().contains(seed)) throw ValidationError("seed cell is outside the sheet");
  if (s.is_blank(seed.row, seed.col)) throw ValidationError("seed cell is blank");
  return grow(Occupancy(s), seed);
}

std::vector<Detection> detect_all_region_growth(const Sheet& s) {
  std::vector<Detection> out;
  if (s.n_rows() == 0 || s.n_cols() == 0) return out;
  const Occupancy occ(s);
  std::set<BBox> seen;
  for (int r = 1; r <= s.n_rows(); ++r) {
    for (int c = 1; c <= s.n_cols(); ++c) {
      if (!occ.at(r, c)) continue;
      const CellRef ref{r, c};
      if (std::any_of(out.begin(), out.end(), [&](const Detection& d) { return d.box.contains(ref); }))
        continue;
      const BBox b = grow(occ, ref);
      if (seen.insert(b).second) out.push_back(Detection{b, 1.0, std::nullopt});
    }
  }
  return out;
}

RegionClassifier constant_classifier(double score) {
  return [score](const Sheet&, const BBox&) { return score; };
}

double box_density(const Sheet& s, const BBox& b) {
  std::int64_t filled = 0;
  for (auto it = s.cells().lower_bound(CellRef{b.row_top, 0});
       it != s.cells().end() && it->first.row <= b.row_bottom; ++it) {
    if (b.contains(it->first) && !it->second.is_blank()) ++filled;
  }
  return static_cast<double>(filled) / static_cast<double>(bbox_area(b));
}

RegionClassifier density_classifier(double min_density) {
  return [min_density](const Sheet& s, const BBox& b) {
    return box_density(s, b) >= min_density ? 1.0 : 0.0;
  };
}

std::vector<Detection> filter_detections(const Sheet& s, const std::vector<Detection>& dets,
                                         const RegionClassifier& classifier) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    const double score = classifier(s, d.box);
    if (score >= 0.5) {
      Detection kept = d;
      kept.score = score;
      out.push_back(std::move(kept));
    }
  }
  return out;
}

}  // namespace sheetscan
