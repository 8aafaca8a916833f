// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

#include "sheetscan/error.hpp"

namespace sheetscan {

double iou(const BBox& a, const BBox& b) {
  const std::int64_t inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  const std::int64_t uni = bbox_area(a) + bbox_area(b) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

int eob(const BBox& a, const BBox& b) {
  return std::max({std::abs(a.row_top - b.row_top), std::abs(a.row_bottom - b.row_bottom),
                   std::abs(a.col_left - b.col_left), std::abs(a.col_right - b.col_right)});
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"threshold", r.threshold == 0 ? "EoB-0" : "EoB-2"},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"matched", r.matched},
          {"total_detections", r.total_detections},
          {"total_ground_truth", r.total_ground_truth}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.threshold = j.at("threshold").get<std::string>() == "EoB-0" ? 0 : 2;
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.matched = j.at("matched").get<int>();
    r.total_detections = j.at("total_detections").get<int>();
    r.total_ground_truth = j.at("total_ground_truth").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("eval report: ") + e.what());
  }
  return r;
}

std::vector<std::pair<int, int>> match_sheet(const std::vector<Detection>& detections,
                                             const std::vector<BBox>& gold, int threshold) {
  struct Candidate {
    int eob;
    double score;
    int det;
    int gt;
  };
  std::vector<Candidate> cands;
  for (int d = 0; d < static_cast<int>(detections.size()); ++d) {
    for (int g = 0; g < static_cast<int>(gold.size()); ++g) {
      const int e = eob(detections[static_cast<std::size_t>(d)].box, gold[static_cast<std::size_t>(g)]);
      if (e <= threshold) cands.push_back({e, detections[static_cast<std::size_t>(d)].score, d, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::make_tuple(a.eob, -a.score, a.det, a.gt) <
           std::make_tuple(b.eob, -b.score, b.det, b.gt);
  });
  std::vector<char> det_used(detections.size(), 0);
  std::vector<char> gt_used(gold.size(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& c : cands) {
    if (det_used[static_cast<std::size_t>(c.det)] || gt_used[static_cast<std::size_t>(c.gt)]) continue;
    det_used[static_cast<std::size_t>(c.det)] = 1;
    gt_used[static_cast<std::size_t>(c.gt)] = 1;
    pairs.emplace_back(c.det, c.gt);
  }
  return pairs;
}

EvalReport match_and_score(const std::map<std::string, std::vector<Detection>>& detections,
                           const GoldMap& gold, int threshold) {
  for (const auto& [sheet_id, dets] : detections) {
    if (!gold.contains(sheet_id)) {
      throw ValidationError("detections for sheet '" + sheet_id + "' have no gold annotation");
    }
  }
  EvalReport r;
  r.threshold = threshold;
  static const std::vector<Detection> kNone;
  for (const auto& [sheet_id, boxes] : gold) {
    const auto it = detections.find(sheet_id);
    const auto& dets = it == detections.end() ? kNone : it->second;
    r.matched += static_cast<int>(match_sheet(dets, boxes, threshold).size());
    r.total_detections += static_cast<int>(dets.size());
    r.total_ground_truth += static_cast<int>(boxes.size());
  }
  if (r.total_detections == 0) {
    r.precision = r.total_ground_truth == 0 ? 1.0 : 0.0;
  } else {
    r.precision = static_cast<double>(r.matched) / r.total_detections;
  }
  r.recall = r.total_ground_truth == 0 ? 1.0
                                       : static_cast<double>(r.matched) / r.total_ground_truth;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

GoldMap gold_map(const std::vector<SheetAnnotation>& labels) {
  GoldMap out;
  for (const auto& l : labels) out[l.sheet_id] = l.tables;
  return out;
}

bool sheet_well_detected(const std::vector<Detection>& detections, const std::vector<BBox>& gold,
                         int threshold) {
  const auto pairs = match_sheet(detections, gold, threshold);
  return pairs.size() == gold.size() && pairs.size() == detections.size();
}

}  // namespace sheetscan
