// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/detector.hpp"

#include <algorithm>

#include "network.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/neuro/nms.hpp"

namespace sheetscan::neuro {

std::vector<Detection> detect(const Model& model, const Sheet& sheet) {
  const auto& cfg = model.config();
  const int h = sheet.n_rows();
  const int w = sheet.n_cols();
  if (static_cast<std::size_t>(h) * static_cast<std::size_t>(w) > cfg.max_cells) {
    throw ValidationError("sheet '" + sheet.id() + "' exceeds the model's size bound of " +
                          std::to_string(cfg.max_cells) + " cells");
  }
  if (h == 0 || w == 0) return {};

  const net::Backbone bb = net::backbone_forward(model, net::input_tensor(sheet, cfg.feature_subset));
  const net::T& feat = bb.features();
  const net::RpnOut rpn = net::rpn_forward(model, feat);
  const std::vector<Roi> rois = net::proposals(model, rpn, h, w);

  std::vector<Detection> candidates;
  for (const Roi& roi : rois) {
    const net::HeadCache head = net::head_forward(model, feat, roi);
    const double score = sigmoid(static_cast<double>(head.cls_logit));
    if (score < cfg.score_threshold) continue;
    const Roi refined = net::refine(roi, head.deltas, h, w);
    BBox box = BoxParam::from_roi(refined).to_bbox();
    if (cfg.use_pbr) {
      int edge[4];
      for (Side s : kSides) {
        edge[static_cast<int>(s)] = net::snapped_boundary(net::pbr_forward(model, feat, refined, s));
      }
      const BBox snapped{std::clamp(edge[0], 1, w), std::clamp(edge[1], 1, h),
                         std::clamp(edge[2], 1, w), std::clamp(edge[3], 1, h)};
      if (snapped.col_left <= snapped.col_right) {
        box.col_left = snapped.col_left;
        box.col_right = snapped.col_right;
      }
      if (snapped.row_top <= snapped.row_bottom) {
        box.row_top = snapped.row_top;
        box.row_bottom = snapped.row_bottom;
      }
    }
    box = {std::clamp(box.col_left, 1, w), std::clamp(box.row_top, 1, h),
           std::clamp(box.col_right, 1, w), std::clamp(box.row_bottom, 1, h)};
    candidates.push_back({box, score, std::nullopt});
  }

  std::vector<Detection> out = nms(std::move(candidates), cfg.nms_iou);
  const net::T mask = net::mask_forward(model, feat);
  for (auto& d : out) {
    std::vector<std::uint8_t> cells;
    cells.reserve(static_cast<std::size_t>(bbox_area(d.box)));
    for (int r = d.box.row_top; r <= d.box.row_bottom; ++r)
      for (int c = d.box.col_left; c <= d.box.col_right; ++c)
        cells.push_back(mask.at(r - 1, c - 1, 0) >= 0.0f ? 1 : 0);
    d.mask = std::move(cells);
  }
  return out;
}

std::map<std::string, std::vector<Detection>> detect_all(const Model& model,
                                                         const std::vector<Sheet>& sheets) {
  std::map<std::string, std::vector<Detection>> out;
  for (const auto& s : sheets) out[s.id()] = detect(model, s);
  return out;
}

}  // namespace sheetscan::neuro
