// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/model.hpp"

namespace sheetscan::neuro {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  /// Mean per-sheet value of each weighted loss term and of their sum ("total").
  std::map<std::string, double> losses;
  /// Held-out scores after this epoch, when an evaluation set was given.
  std::optional<EvalReport> eval_eob0;
  std::optional<EvalReport> eval_eob2;
};

nlohmann::json to_json(const EpochRecord& r);

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

struct EvalSet {
  std::vector<Sheet> sheets;
  std::vector<SheetAnnotation> labels;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains from a seeded initialization. Deterministic for a fixed
/// TrainConfig::seed. Throws ValidationError naming the first sheet that
/// has no annotation.
TrainResult train(const std::vector<Sheet>& sheets, const std::vector<SheetAnnotation>& labels,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const EvalSet* eval = nullptr, const EpochCallback& on_epoch = {});

/// Continues training from `init` (its configuration is kept).
TrainResult train_from(Model init, const std::vector<Sheet>& sheets,
                       const std::vector<SheetAnnotation>& labels, const TrainConfig& tcfg,
                       const EvalSet* eval = nullptr, const EpochCallback& on_epoch = {});

}  // namespace sheetscan::neuro
