// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/grid.hpp"

namespace sheetscan {

/// Cell-count intersection over cell-count union.
double iou(const BBox& a, const BBox& b);

/// Error-of-boundary: the largest absolute difference among the four edges.
int eob(const BBox& a, const BBox& b);

struct EvalReport {
  int threshold = 2;  // EoB tolerance: 0 or 2
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int matched = 0;
  int total_detections = 0;
  int total_ground_truth = 0;

  bool operator==(const EvalReport&) const = default;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// (detection index, ground-truth index) pairs chosen on one sheet: candidates
/// within the EoB tolerance, taken greedily by (eob asc, score desc), each box
/// used at most once.
std::vector<std::pair<int, int>> match_sheet(const std::vector<Detection>& detections,
                                             const std::vector<BBox>& gold, int threshold);

using GoldMap = std::map<std::string, std::vector<BBox>>;

/// Corpus-level precision/recall/F1. Sheets absent from `detections` count as
/// having none; a sheet in `detections` without gold throws ValidationError.
EvalReport match_and_score(const std::map<std::string, std::vector<Detection>>& detections,
                           const GoldMap& gold, int threshold);

GoldMap gold_map(const std::vector<SheetAnnotation>& labels);

/// True when every gold table is matched within EoB-2 and no detection is
/// left unmatched.
bool sheet_well_detected(const std::vector<Detection>& detections, const std::vector<BBox>& gold,
                         int threshold = 2);

}  // namespace sheetscan
