// SPDX-License-Identifier: Apache-2.0
//
// Sheet-level uncertainty, selection by uncertainty, and the iterative
// select / label / retrain loop.
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/grid.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/model.hpp"
#include "sheetscan/neuro/trainer.hpp"

namespace sheetscan {

struct UncertaintyVector {
  double cls_uncertainty = 0.0;
  double mask_mismatch = 0.0;
  double sparsity = 0.0;
  double overlap_indicator = 0.0;
  double boundary_mismatch = 0.0;
  double out_of_region = 0.0;
  /// L2 norm of the six measures.
  double overall = 0.0;

  std::array<double, 6> measures() const {
    return {cls_uncertainty, mask_mismatch, sparsity, overlap_indicator, boundary_mismatch,
            out_of_region};
  }
  static UncertaintyVector from_measures(const std::array<double, 6>& m);
  bool operator==(const UncertaintyVector&) const = default;
};

nlohmann::json to_json(const UncertaintyVector& u);
UncertaintyVector uncertainty_from_json(const nlohmann::json& j);

/// How per-table blank ratios combine into the sheet-level sparsity.
enum class SparsityMode { max, min };

/// Throws ValidationError when a detection leaves the sheet.
UncertaintyVector uncertainty(const Sheet& s, const std::vector<Detection>& dets,
                              SparsityMode mode = SparsityMode::max);

struct ScoredSheet {
  std::string sheet_id;
  UncertaintyVector u;
};

/// Detects with `model` and scores every sheet, in input order.
std::vector<ScoredSheet> score_pool(const neuro::Model& model, const std::vector<Sheet>& sheets,
                                    SparsityMode mode = SparsityMode::max);

/// Descending overall score, ties by sheet id. With `threshold`, keeps
/// sheets whose overall is at least the threshold; with `top_n`, keeps the
/// first n after ranking. Both may be combined.
std::vector<ScoredSheet> select_sheets(std::vector<ScoredSheet> pool,
                                       std::optional<double> threshold,
                                       std::optional<int> top_n = std::nullopt);

struct SheetOutcome {
  bool well_detected = false;
  double overall = 0.0;
};

struct SelectionAccuracy {
  int error_selected = 0;  // error sheets with overall >= threshold
  int error_total = 0;
  int correct_kept = 0;    // well-detected sheets with overall < threshold
  int correct_total = 0;

  /// Fractions; an empty class reports 1.0.
  double error_accuracy() const;
  double correct_accuracy() const;
};

SelectionAccuracy selection_accuracy(const std::vector<SheetOutcome>& outcomes, double threshold);

/// Percentage truncated (not rounded) to one decimal, computed exactly from
/// the counts: 184/212 -> 86.7.
double percent_truncated(int numerator, int denominator);

struct LoopConfig {
  int batch_size = 10;
  /// Stop once held-out EoB-2 F1 reaches this value.
  double target_f1 = 0.95;
  /// Stop after this many iterations without F1 improvement.
  int patience = 2;
  int max_iterations = 100;
  /// Continue training the previous model instead of restarting from the seed.
  bool warm_start = false;
  SparsityMode sparsity = SparsityMode::max;

  void validate() const;
};

nlohmann::json to_json(const LoopConfig& c);
LoopConfig loop_config_from_json(const nlohmann::json& j);

struct LoopIteration {
  int iteration = 0;
  std::vector<std::string> selected;
  int labeled_count = 0;
  EvalReport eval;
};

struct LoopState {
  std::vector<SheetAnnotation> labeled;
  std::vector<std::string> unlabeled;
  int iteration = 0;
  std::vector<LoopIteration> history;
  double best_f1 = -1.0;
  int stale_iterations = 0;
  /// "running", "target_reached", "patience_exhausted", "pool_exhausted",
  /// "max_iterations" or "aborted".
  std::string status = "running";
  std::string error;

  bool finished() const { return status != "running"; }
};

nlohmann::json to_json(const LoopState& s);
LoopState loop_state_from_json(const nlohmann::json& j);

using Labeler = std::function<SheetAnnotation(const Sheet&)>;

struct LoopResult {
  neuro::Model model;
  LoopState state;
};

/// Runs select -> label -> retrain -> evaluate until a stop criterion fires.
/// `initial` is the iteration-0 detector (seeded, untrained when absent).
/// `resume` continues from a checkpointed state; without `initial` and with
/// cold-start rounds the last detector is rebuilt from the labeled set, so a
/// resumed run matches an uninterrupted one. A throwing labeler aborts
/// the loop with status "aborted"; the state then reflects the last
/// completed iteration.
LoopResult run_loop(const std::vector<Sheet>& pool, const Labeler& labeler,
                    const neuro::EvalSet& heldout, const neuro::ModelConfig& mcfg,
                    const neuro::TrainConfig& tcfg, const LoopConfig& lcfg,
                    std::optional<neuro::Model> initial = std::nullopt,
                    std::optional<LoopState> resume = std::nullopt,
                    const std::function<void(const LoopState&)>& on_iteration = {});

}  // namespace sheetscan
