// SPDX-License-Identifier: Apache-2.0
//
// Region-growth detector: the rectangular "current region" a spreadsheet
// application selects around a cell, plus a pluggable post-filter.
#pragma once

#include <functional>
#include <vector>

#include "sheetscan/grid.hpp"

namespace sheetscan {

/// Grows a 1x1 box at `seed` until none of its four sides can expand. A side
/// expands when the row/column just outside it, extended by one cell at each
/// end, holds a non-blank cell. Throws ValidationError for a blank or
/// out-of-bounds seed.
BBox region_grow(const Sheet& s, CellRef seed);

/// Grows from every non-blank cell not already covered, in row-major order.
/// Identical boxes are reported once; each has score 1.0 and no mask.
std::vector<Detection> detect_all_region_growth(const Sheet& s);

/// Maps a candidate region to a table-likeness score in [0, 1].
using RegionClassifier = std::function<double(const Sheet&, const BBox&)>;

RegionClassifier constant_classifier(double score = 1.0);

/// 1.0 when the non-blank fraction of the box is at least `min_density`.
RegionClassifier density_classifier(double min_density = 0.3);

double box_density(const Sheet& s, const BBox& b);

/// Keeps detections scoring at least 0.5 and replaces their score.
std::vector<Detection> filter_detections(const Sheet& s, const std::vector<Detection>& dets,
                                         const RegionClassifier& classifier = constant_classifier());

}  // namespace sheetscan
