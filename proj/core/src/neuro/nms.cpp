// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/nms.hpp"

#include <algorithm>

#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/box_coding.hpp"

namespace sheetscan::neuro {

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.box < b.box;
  });
  std::vector<Detection> kept;
  for (auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

std::vector<int> nms_regions(const std::vector<Roi>& regions, const std::vector<int>& order,
                             double iou_threshold, int max_keep) {
  std::vector<int> kept;
  for (int idx : order) {
    if (static_cast<int>(kept.size()) >= max_keep) break;
    const Roi& r = regions[static_cast<std::size_t>(idx)];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](int k) {
      return roi_iou(regions[static_cast<std::size_t>(k)], r) > iou_threshold;
    });
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

}  // namespace sheetscan::neuro
