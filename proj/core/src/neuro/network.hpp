// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward passes of the detector, shared by inference and
// training. Float throughout.
#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/neuro/box_coding.hpp"
#include "sheetscan/neuro/layers.hpp"
#include "sheetscan/neuro/model.hpp"

namespace sheetscan::neuro::net {

using T = Tensor<float>;
using Grads = std::map<std::string, std::vector<float>>;

Grads zero_grads(const Model& m);

T input_tensor(const Sheet& s, FeatureSubset subset);

struct Backbone {
  T input;
  std::vector<T> acts;      // acts[0] stem output, acts[i+1] = acts[i] + branch[i]
  std::vector<T> branches;  // post-ReLU residual branches
  const T& features() const { return acts.back(); }
};

Backbone backbone_forward(const Model& m, T input);
void backbone_backward(const Model& m, const Backbone& b, T d_feat, Grads& g);

struct RpnOut {
  T obj;     // h x w x A logits
  T deltas;  // h x w x 4A
};

RpnOut rpn_forward(const Model& m, const T& feat);
void rpn_backward(const Model& m, const T& feat, const T& d_obj, const T& d_deltas, T& d_feat,
                  Grads& g);

/// Anchor behind flat objectness index `idx` (position-major, then scale, ratio).
BoxParam anchor_at(const ModelConfig& cfg, int w, int idx);

/// Sheet-extent region [0.5, n+0.5].
Roi sheet_roi(int h, int w);
Roi clip_roi(const Roi& r, int h, int w);

/// Decoded, clipped, NMS-filtered proposals, best first.
std::vector<Roi> proposals(const Model& m, const RpnOut& rpn, int h, int w);

struct HeadCache {
  Roi roi;
  T aligned;
  T reduced;
  std::vector<float> hidden;
  float cls_logit = 0.0f;
  std::array<float, 4> deltas{};
};

HeadCache head_forward(const Model& m, const T& feat, const Roi& roi);
void head_backward(const Model& m, const HeadCache& c, float d_cls,
                   const std::array<float, 4>& d_deltas, T& d_feat, Grads& g);

/// Box after applying the head's deltas to its RoI, clipped to the sheet.
Roi refine(const Roi& roi, const std::array<float, 4>& deltas, int h, int w);

struct PbrCache {
  BandGeometry geom;
  T band;
  PbrSideCache<float> side;
};

PbrCache pbr_forward(const Model& m, const T& feat, const Roi& box, Side side);
void pbr_backward(const Model& m, const PbrCache& c, float d_offset, T& d_feat, Grads& g);

/// +1 when a positive offset moves this side's boundary to a larger index.
int outward_sign(Side s);
/// Snapped boundary row/column for a predicted offset.
int snapped_boundary(const PbrCache& c);

T mask_forward(const Model& m, const T& feat);
void mask_backward(const Model& m, const T& feat, const T& d_logits, T& d_feat, Grads& g);

}  // namespace sheetscan::neuro::net
