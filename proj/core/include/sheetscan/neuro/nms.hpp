// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/neuro/layers.hpp"

namespace sheetscan::neuro {

/// Greedy suppression by descending score (ties broken by the box's
/// lexicographic order); a box survives unless its cell IoU with an already
/// kept box exceeds `iou_threshold`.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Same procedure over continuous regions. `order` lists candidate indices
/// best first; returns at most `max_keep` surviving indices.
std::vector<int> nms_regions(const std::vector<Roi>& regions, const std::vector<int>& order,
                             double iou_threshold, int max_keep);

}  // namespace sheetscan::neuro
