// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/model.hpp"

#include <cmath>

#include "sheetscan/binary_io.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/neuro/layers.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan::neuro {
namespace {

constexpr std::uint32_t kVersion = 1;

std::size_t count_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

struct InitRule {
  double stddev;
  double bias;
};

InitRule init_rule(const std::string& name, const std::vector<int>& shape) {
  std::size_t fan_in = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) fan_in *= static_cast<std::size_t>(shape[i]);
  const double he = std::sqrt(2.0 / static_cast<double>(fan_in));
  if (name.starts_with("block")) return {0.5 * he, 0.0};
  if (name == "rpn.obj.w" || name == "rpn.bbr.w" || name == "head.cls.w" ||
      name == "head.bbr.w" || name == "mask.w" || name.ends_with(".score.w")) {
    return {0.01, 0.0};
  }
  return {he, 0.0};
}

}  // namespace

std::map<std::string, std::vector<int>> param_layout(const ModelConfig& cfg) {
  const int c = cfg.backbone_channels;
  const int a = cfg.anchors_per_position();
  const int r = cfg.head_reduce_channels;
  const int hid = cfg.head_hidden;
  const int m = cfg.pbr_hidden;
  std::map<std::string, std::vector<int>> out;
  out["stem.w"] = {3, 3, kFeatureChannels, c};
  out["stem.b"] = {c};
  for (int i = 0; i < cfg.backbone_blocks; ++i) {
    out["block" + std::to_string(i) + ".w"] = {3, 3, c, c};
    out["block" + std::to_string(i) + ".b"] = {c};
  }
  out["rpn.obj.w"] = {1, 1, c, a};
  out["rpn.obj.b"] = {a};
  out["rpn.bbr.w"] = {1, 1, c, 4 * a};
  out["rpn.bbr.b"] = {4 * a};
  out["mask.w"] = {1, 1, c, 1};
  out["mask.b"] = {1};
  out["head.reduce.w"] = {1, 1, c, r};
  out["head.reduce.b"] = {r};
  out["head.fc.w"] = {cfg.roialign_out * cfg.roialign_out * r, hid};
  out["head.fc.b"] = {hid};
  out["head.cls.w"] = {hid, 1};
  out["head.cls.b"] = {1};
  out["head.bbr.w"] = {hid, 4};
  out["head.bbr.b"] = {4};
  for (Side s : kSides) {
    const std::string p = std::string("pbr.") + side_name(s);
    out[p + ".conv.w"] = {1, 3, c, m};
    out[p + ".conv.b"] = {m};
    out[p + ".score.w"] = {cfg.pbr_band_pool, m};
  }
  return out;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : config_(std::move(cfg)) {
  config_.validate();
  Rng rng(seed);
  for (const auto& [name, shape] : param_layout(config_)) {
    Param p{shape, std::vector<float>(count_of(shape), 0.0f)};
    const bool is_bias = name.ends_with(".b");
    if (!is_bias) {
      const InitRule rule = init_rule(name, shape);
      for (auto& v : p.value) v = static_cast<float>(rule.stddev * rng.normal());
    }
    params_.emplace(name, std::move(p));
  }
  // Objectness starts near a 1% prior so the first proposals are not noise.
  for (auto& v : params_.at("rpn.obj.b").value) v = static_cast<float>(-std::log(99.0));
}

const Param& Model::param(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw InvariantError("model has no parameter '" + name + "'");
  return it->second;
}

Param& Model::param(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw InvariantError("model has no parameter '" + name + "'");
  return it->second;
}

std::string Model::serialize() const {
  std::string out = "TSMW";
  binio::put_u32(out, kVersion);
  const std::string cfg = to_json(config_).dump();
  binio::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  for (const auto& [name, p] : params_) {
    binio::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    binio::put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) binio::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.value) binio::put_f32(out, v);
  }
  return out;
}

Model Model::deserialize(std::string_view bytes) {
  binio::Reader in(bytes);
  if (in.take(4, "model magic") != "TSMW") throw SchemaError("model: bad magic (expected TSMW)");
  const std::uint32_t version = in.u32("model version");
  if (version != kVersion) throw SchemaError("model: unsupported version " + std::to_string(version));
  const std::uint32_t cfg_len = in.u32("model config length");
  const auto cfg_text = in.take(cfg_len, "model config");
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(cfg_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model: config is not JSON: ") + e.what());
  }
  Model m;
  try {
    m.config_ = model_config_from_json(cfg_json);
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
  const auto layout = param_layout(m.config_);
  while (!in.done()) {
    const std::uint32_t name_len = in.u32("weight name length");
    std::string name(in.take(name_len, "weight name"));
    const std::uint32_t rank = in.u32("weight rank");
    if (rank > 8) throw SchemaError("model: weight '" + name + "' has implausible rank");
    Param p;
    for (std::uint32_t i = 0; i < rank; ++i) p.shape.push_back(static_cast<int>(in.u32("weight dim")));
    const auto it = layout.find(name);
    if (it == layout.end()) throw SchemaError("model: unexpected weight '" + name + "'");
    if (it->second != p.shape) throw SchemaError("model: weight '" + name + "' has the wrong shape");
    const std::size_t n = count_of(p.shape);
    if (in.remaining() < 4 * n) throw SchemaError("truncated weight '" + name + "'");
    p.value.resize(n);
    for (auto& v : p.value) v = in.f32("weight data");
    if (!m.params_.emplace(name, std::move(p)).second) {
      throw SchemaError("model: duplicate weight '" + name + "'");
    }
  }
  for (const auto& [name, shape] : layout) {
    if (!m.params_.contains(name)) throw SchemaError("model: missing weight '" + name + "'");
  }
  return m;
}

void Model::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Model Model::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace sheetscan::neuro
