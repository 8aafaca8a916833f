// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/featurize.hpp"
#include "sheetscan/grid.hpp"

namespace sheetscan::neuro {

struct ModelConfig {
  int backbone_channels = 32;
  /// Residual blocks after the stem; block i uses dilation 2^i.
  int backbone_blocks = 4;
  std::vector<double> anchor_scales{4, 8, 16, 32, 64};
  std::vector<double> anchor_ratios{0.125, 0.25, 0.5, 1, 2, 4, 8};
  int pre_nms_top = 1000;
  double proposal_nms_iou = 0.7;
  int proposals_kept = 100;
  int roialign_out = 14;
  int head_reduce_channels = 8;
  int head_hidden = 64;
  int pbr_k = 7;
  int pbr_band_pool = 7;
  int pbr_hidden = 16;
  double nms_iou = 0.5;
  double score_threshold = 0.5;
  bool use_pbr = true;
  FeatureSubset feature_subset = FeatureSubset::full;
  std::size_t max_cells = kDefaultMaxCells;

  /// Anchor spans of the original large-corpus setting: scales 8..4096 and
  /// ratios 1/256..256 in factors of two, 2000 proposals.
  static ModelConfig large_scale();

  int anchors_per_position() const noexcept {
    return static_cast<int>(anchor_scales.size() * anchor_ratios.size());
  }
  /// Throws ValidationError naming the offending field.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 1;
  std::uint64_t seed = 0;
  /// "adam" or "sgd" (plain gradient descent).
  std::string optimizer = "adam";
  /// "constant" or "cosine" (decays to 5% of the base rate).
  std::string lr_schedule = "cosine";
  std::map<std::string, double> loss_weights{{"rpn_obj", 1.0}, {"rpn_bbr", 1.0}, {"cls", 1.0},
                                             {"bbr", 1.0},     {"pbr", 0.25},    {"mask", 1.0}};
  int rpn_batch = 256;
  int roi_batch = 64;
  double roi_positive_fraction = 0.25;
  /// Randomly perturbed copies of each ground-truth box added to the RoIs.
  int gt_jitter = 4;
  int jitter_cells = 3;

  double loss_weight(const std::string& name) const;
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
/// Missing fields keep their defaults; wrong types throw SchemaError.
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace sheetscan::neuro
