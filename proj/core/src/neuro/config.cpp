// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/config.hpp"

#include <cmath>

#include "sheetscan/error.hpp"

namespace sheetscan::neuro {
namespace {

const char* const kLossNames[] = {"rpn_obj", "rpn_bbr", "cls", "bbr", "pbr", "mask"};

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("config field '") + key + "' has the wrong type");
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

}  // namespace

ModelConfig ModelConfig::large_scale() {
  ModelConfig c;
  c.anchor_scales.clear();
  for (double s = 8; s <= 4096; s *= 2) c.anchor_scales.push_back(s);
  c.anchor_ratios.clear();
  for (int e = -8; e <= 8; ++e) c.anchor_ratios.push_back(std::ldexp(1.0, e));
  c.proposals_kept = 2000;
  c.pre_nms_top = 6000;
  return c;
}

void ModelConfig::validate() const {
  require(backbone_channels >= 1, "backbone_channels must be positive");
  require(backbone_blocks >= 0, "backbone_blocks must be non-negative");
  require(!anchor_scales.empty(), "anchor_scales must be non-empty");
  require(!anchor_ratios.empty(), "anchor_ratios must be non-empty");
  for (double s : anchor_scales) require(s > 0, "anchor_scales must be positive");
  for (double r : anchor_ratios) require(r > 0, "anchor_ratios must be positive");
  require(pre_nms_top >= 1, "pre_nms_top must be positive");
  require(proposals_kept >= 1, "proposals_kept must be positive");
  require(proposal_nms_iou > 0 && proposal_nms_iou <= 1, "proposal_nms_iou must be in (0,1]");
  require(roialign_out >= 2, "roialign_out must be at least 2");
  require(head_reduce_channels >= 1 && head_hidden >= 1, "head sizes must be positive");
  require(pbr_k >= 1, "pbr_k must be at least 1");
  require(pbr_band_pool >= 1 && pbr_hidden >= 1, "pbr sizes must be positive");
  require(nms_iou > 0 && nms_iou <= 1, "nms_iou must be in (0,1]");
  require(score_threshold >= 0 && score_threshold <= 1, "score_threshold must be in [0,1]");
  require(max_cells >= 1, "max_cells must be positive");
}

double TrainConfig::loss_weight(const std::string& name) const {
  const auto it = loss_weights.find(name);
  return it == loss_weights.end() ? 1.0 : it->second;
}

void TrainConfig::validate() const {
  require(epochs >= 0, "epochs must be non-negative");
  require(learning_rate > 0, "learning_rate must be positive");
  require(weight_decay >= 0, "weight_decay must be non-negative");
  require(batch_size == 1, "batch_size must be 1");
  require(optimizer == "adam" || optimizer == "sgd", "optimizer must be 'adam' or 'sgd'");
  require(lr_schedule == "constant" || lr_schedule == "cosine",
          "lr_schedule must be 'constant' or 'cosine'");
  for (const auto& [name, w] : loss_weights) {
    bool known = false;
    for (const char* k : kLossNames) known = known || name == k;
    require(known, "unknown loss weight '" + name + "'");
    require(w >= 0, "loss weight '" + name + "' must be non-negative");
  }
  require(rpn_batch >= 2 && roi_batch >= 2, "sample batches must hold at least 2 items");
  require(roi_positive_fraction > 0 && roi_positive_fraction <= 1,
          "roi_positive_fraction must be in (0,1]");
  require(gt_jitter >= 0 && jitter_cells >= 0, "jitter settings must be non-negative");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"backbone_channels", c.backbone_channels},
          {"backbone_blocks", c.backbone_blocks},
          {"anchor_scales", c.anchor_scales},
          {"anchor_ratios", c.anchor_ratios},
          {"pre_nms_top", c.pre_nms_top},
          {"proposal_nms_iou", c.proposal_nms_iou},
          {"proposals_kept", c.proposals_kept},
          {"roialign_out", c.roialign_out},
          {"head_reduce_channels", c.head_reduce_channels},
          {"head_hidden", c.head_hidden},
          {"pbr_k", c.pbr_k},
          {"pbr_band_pool", c.pbr_band_pool},
          {"pbr_hidden", c.pbr_hidden},
          {"nms_iou", c.nms_iou},
          {"score_threshold", c.score_threshold},
          {"use_pbr", c.use_pbr},
          {"feature_subset", std::string(to_string(c.feature_subset))},
          {"max_cells", c.max_cells}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("model config must be a JSON object");
  ModelConfig c;
  read_field(j, "backbone_channels", c.backbone_channels);
  read_field(j, "backbone_blocks", c.backbone_blocks);
  read_field(j, "anchor_scales", c.anchor_scales);
  read_field(j, "anchor_ratios", c.anchor_ratios);
  read_field(j, "pre_nms_top", c.pre_nms_top);
  read_field(j, "proposal_nms_iou", c.proposal_nms_iou);
  read_field(j, "proposals_kept", c.proposals_kept);
  read_field(j, "roialign_out", c.roialign_out);
  read_field(j, "head_reduce_channels", c.head_reduce_channels);
  read_field(j, "head_hidden", c.head_hidden);
  read_field(j, "pbr_k", c.pbr_k);
  read_field(j, "pbr_band_pool", c.pbr_band_pool);
  read_field(j, "pbr_hidden", c.pbr_hidden);
  read_field(j, "nms_iou", c.nms_iou);
  read_field(j, "score_threshold", c.score_threshold);
  read_field(j, "use_pbr", c.use_pbr);
  read_field(j, "max_cells", c.max_cells);
  std::string subset(to_string(c.feature_subset));
  read_field(j, "feature_subset", subset);
  c.feature_subset = feature_subset_from_string(subset);
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"optimizer", c.optimizer},
          {"lr_schedule", c.lr_schedule},
          {"loss_weights", c.loss_weights},
          {"rpn_batch", c.rpn_batch},
          {"roi_batch", c.roi_batch},
          {"roi_positive_fraction", c.roi_positive_fraction},
          {"gt_jitter", c.gt_jitter},
          {"jitter_cells", c.jitter_cells}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("train config must be a JSON object");
  TrainConfig c;
  read_field(j, "epochs", c.epochs);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "weight_decay", c.weight_decay);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "seed", c.seed);
  read_field(j, "optimizer", c.optimizer);
  read_field(j, "lr_schedule", c.lr_schedule);
  std::map<std::string, double> weights;
  read_field(j, "loss_weights", weights);
  for (const auto& [k, v] : weights) c.loss_weights[k] = v;
  read_field(j, "rpn_batch", c.rpn_batch);
  read_field(j, "roi_batch", c.roi_batch);
  read_field(j, "roi_positive_fraction", c.roi_positive_fraction);
  read_field(j, "gt_jitter", c.gt_jitter);
  read_field(j, "jitter_cells", c.jitter_cells);
  c.validate();
  return c;
}

}  // namespace sheetscan::neuro
