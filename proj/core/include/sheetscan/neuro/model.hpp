// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sheetscan/neuro/config.hpp"

namespace sheetscan::neuro {

struct Param {
  std::vector<int> shape;
  std::vector<float> value;

  std::size_t count() const noexcept { return value.size(); }
  bool operator==(const Param&) const = default;
};

using ParamMap = std::map<std::string, Param>;

/// Names and shapes of every weight block implied by `cfg`.
std::map<std::string, std::vector<int>> param_layout(const ModelConfig& cfg);

/// Configuration plus named float weights.
///
///   stem.{w,b}            3x3 conv, 20 -> C
///   block<i>.{w,b}        3x3 conv C -> C, dilation 2^i, residual
///   rpn.obj / rpn.bbr     1x1 convs to A objectness logits and 4A deltas
///   mask.{w,b}            1x1 conv to one table-membership logit per cell
///   head.reduce           1x1 conv on the RoIAlign grid
///   head.fc, head.cls, head.bbr
///   pbr.<side>.conv / pbr.<side>.score
class Model {
 public:
  Model() = default;
  /// Seeded He-normal initialization.
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  /// Inference-time switches (use_pbr, score_threshold, nms_iou) may be
  /// changed freely; structural fields must not be.
  ModelConfig& config() noexcept { return config_; }

  const ParamMap& params() const noexcept { return params_; }
  ParamMap& params() noexcept { return params_; }
  /// Throws InvariantError for unknown names.
  const Param& param(const std::string& name) const;
  Param& param(const std::string& name);

  /// TSMW bytes: "TSMW", u32 version, u32 config length, config JSON, then
  /// named blocks (u32 name length, name, u32 rank, u32 dims..., float32 LE).
  std::string serialize() const;
  /// Throws SchemaError on malformed data or weights not matching the config.
  static Model deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  bool operator==(const Model&) const = default;

 private:
  ModelConfig config_;
  ParamMap params_;
};

}  // namespace sheetscan::neuro
