// SPDX-License-Identifier: Apache-2.0
#include "network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sheetscan/featurize.hpp"
#include "sheetscan/neuro/nms.hpp"

namespace sheetscan::neuro::net {
namespace {

// Largest log-scale change a delta may apply, as in common two-stage detectors.
constexpr float kMaxLogScale = 4.135f;

std::span<const float> P(const Model& m, const std::string& name) {
  return m.param(name).value;
}

std::span<float> G(Grads& g, const std::string& name) { return g.at(name); }

ConvSpec stem_spec(const ModelConfig& c) { return {3, 3, kFeatureChannels, c.backbone_channels, 1}; }

ConvSpec block_spec(const ModelConfig& c, int i) {
  return {3, 3, c.backbone_channels, c.backbone_channels, 1 << i};
}

ConvSpec pointwise(int c_in, int c_out) { return {1, 1, c_in, c_out, 1}; }

std::string block_name(int i) { return "block" + std::to_string(i); }

std::string pbr_prefix(Side s) { return std::string("pbr.") + side_name(s); }

}  // namespace

Grads zero_grads(const Model& m) {
  Grads g;
  for (const auto& [name, p] : m.params()) g.emplace(name, std::vector<float>(p.count(), 0.0f));
  return g;
}

T input_tensor(const Sheet& s, FeatureSubset subset) {
  FeatureTensor f = featurize_sheet(s, subset);
  T t;
  t.h = f.h;
  t.w = f.w;
  t.c = kFeatureChannels;
  t.data = std::move(f.data);
  return t;
}

Backbone backbone_forward(const Model& m, T input) {
  const auto& cfg = m.config();
  Backbone b;
  b.input = std::move(input);
  T stem = conv2d_forward<float>(b.input, stem_spec(cfg), P(m, "stem.w"), P(m, "stem.b"));
  relu_inplace(stem);
  b.acts.push_back(std::move(stem));
  for (int i = 0; i < cfg.backbone_blocks; ++i) {
    const std::string n = block_name(i);
    T br = conv2d_forward<float>(b.acts.back(), block_spec(cfg, i), P(m, n + ".w"), P(m, n + ".b"));
    relu_inplace(br);
    T next = b.acts.back();
    for (std::size_t k = 0; k < next.data.size(); ++k) next.data[k] += br.data[k];
    b.branches.push_back(std::move(br));
    b.acts.push_back(std::move(next));
  }
  return b;
}

void backbone_backward(const Model& m, const Backbone& b, T d, Grads& g) {
  const auto& cfg = m.config();
  for (int i = cfg.backbone_blocks - 1; i >= 0; --i) {
    const std::string n = block_name(i);
    T d_branch = d;
    relu_backward_inplace(b.branches[static_cast<std::size_t>(i)], d_branch);
    T d_in(d.h, d.w, d.c);
    conv2d_backward<float>(b.acts[static_cast<std::size_t>(i)], block_spec(cfg, i), P(m, n + ".w"),
                           d_branch, &d_in, G(g, n + ".w"), G(g, n + ".b"));
    for (std::size_t k = 0; k < d.data.size(); ++k) d.data[k] += d_in.data[k];
  }
  relu_backward_inplace(b.acts.front(), d);
  conv2d_backward<float>(b.input, stem_spec(cfg), P(m, "stem.w"), d, nullptr, G(g, "stem.w"),
                         G(g, "stem.b"));
}

RpnOut rpn_forward(const Model& m, const T& feat) {
  const auto& cfg = m.config();
  const int a = cfg.anchors_per_position();
  const int c = cfg.backbone_channels;
  return {conv2d_forward<float>(feat, pointwise(c, a), P(m, "rpn.obj.w"), P(m, "rpn.obj.b")),
          conv2d_forward<float>(feat, pointwise(c, 4 * a), P(m, "rpn.bbr.w"), P(m, "rpn.bbr.b"))};
}

void rpn_backward(const Model& m, const T& feat, const T& d_obj, const T& d_deltas, T& d_feat,
                  Grads& g) {
  const auto& cfg = m.config();
  const int a = cfg.anchors_per_position();
  const int c = cfg.backbone_channels;
  conv2d_backward<float>(feat, pointwise(c, a), P(m, "rpn.obj.w"), d_obj, &d_feat,
                         G(g, "rpn.obj.w"), G(g, "rpn.obj.b"));
  conv2d_backward<float>(feat, pointwise(c, 4 * a), P(m, "rpn.bbr.w"), d_deltas, &d_feat,
                         G(g, "rpn.bbr.w"), G(g, "rpn.bbr.b"));
}

BoxParam anchor_at(const ModelConfig& cfg, int w, int idx) {
  const int a_n = cfg.anchors_per_position();
  const int pos = idx / a_n;
  const int a = idx % a_n;
  const int n_ratios = static_cast<int>(cfg.anchor_ratios.size());
  const double scale = cfg.anchor_scales[static_cast<std::size_t>(a / n_ratios)];
  const double root = std::sqrt(cfg.anchor_ratios[static_cast<std::size_t>(a % n_ratios)]);
  return {pos % w + 1.0, pos / w + 1.0, scale * root, scale / root};
}

Roi sheet_roi(int h, int w) { return {0.5, 0.5, w + 0.5, h + 0.5}; }

Roi clip_roi(const Roi& r, int h, int w) {
  const Roi s = sheet_roi(h, w);
  return {std::clamp(r.x0, s.x0, s.x1), std::clamp(r.y0, s.y0, s.y1), std::clamp(r.x1, s.x0, s.x1),
          std::clamp(r.y1, s.y0, s.y1)};
}

namespace {

BoxParam apply_deltas(const BoxParam& a, const float* t) {
  const BbrTargets d{t[0], t[1], std::min(t[2], kMaxLogScale), std::min(t[3], kMaxLogScale)};
  return bbr_decode(d, a);
}

// Keeps at least one cell of extent so downstream sampling stays defined.
Roi ensure_extent(Roi r, int h, int w) {
  if (r.x1 - r.x0 < 1.0) {
    const double cx = std::clamp((r.x0 + r.x1) / 2, 1.0, static_cast<double>(w));
    r.x0 = cx - 0.5;
    r.x1 = cx + 0.5;
  }
  if (r.y1 - r.y0 < 1.0) {
    const double cy = std::clamp((r.y0 + r.y1) / 2, 1.0, static_cast<double>(h));
    r.y0 = cy - 0.5;
    r.y1 = cy + 0.5;
  }
  return r;
}

}  // namespace

std::vector<Roi> proposals(const Model& m, const RpnOut& rpn, int h, int w) {
  const auto& cfg = m.config();
  const int n = static_cast<int>(rpn.obj.data.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int top = std::min(n, cfg.pre_nms_top);
  const auto& s = rpn.obj.data;
  std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](int a, int b) {
    const float sa = s[static_cast<std::size_t>(a)];
    const float sb = s[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  std::vector<Roi> regions;
  std::vector<int> order;
  for (int i = 0; i < top; ++i) {
    const int a = idx[static_cast<std::size_t>(i)];
    const BoxParam b = apply_deltas(anchor_at(cfg, w, a), &rpn.deltas.data[4 * static_cast<std::size_t>(a)]);
    const Roi r = clip_roi(b.to_roi(), h, w);
    if (!(r.width() >= 1.0) || !(r.height() >= 1.0)) continue;
    order.push_back(static_cast<int>(regions.size()));
    regions.push_back(r);
  }
  std::vector<Roi> out;
  for (int k : nms_regions(regions, order, cfg.proposal_nms_iou, cfg.proposals_kept))
    out.push_back(regions[static_cast<std::size_t>(k)]);
  return out;
}

HeadCache head_forward(const Model& m, const T& feat, const Roi& roi) {
  const auto& cfg = m.config();
  HeadCache c;
  c.roi = roi;
  c.aligned = roi_align(feat, roi, cfg.roialign_out, cfg.roialign_out);
  c.reduced = conv2d_forward<float>(c.aligned, pointwise(feat.c, cfg.head_reduce_channels),
                                    P(m, "head.reduce.w"), P(m, "head.reduce.b"));
  relu_inplace(c.reduced);
  c.hidden = dense_forward<float>(c.reduced.data, P(m, "head.fc.w"), P(m, "head.fc.b"));
  for (auto& v : c.hidden) v = std::max(v, 0.0f);
  c.cls_logit = dense_forward<float>(c.hidden, P(m, "head.cls.w"), P(m, "head.cls.b"))[0];
  const auto d = dense_forward<float>(c.hidden, P(m, "head.bbr.w"), P(m, "head.bbr.b"));
  std::copy(d.begin(), d.end(), c.deltas.begin());
  return c;
}

void head_backward(const Model& m, const HeadCache& c, float d_cls,
                   const std::array<float, 4>& d_deltas, T& d_feat, Grads& g) {
  const auto& cfg = m.config();
  std::vector<float> d_hidden(c.hidden.size(), 0.0f);
  const float dc[1] = {d_cls};
  dense_backward<float>(c.hidden, P(m, "head.cls.w"), dc, d_hidden, G(g, "head.cls.w"),
                        G(g, "head.cls.b"));
  dense_backward<float>(c.hidden, P(m, "head.bbr.w"), d_deltas, d_hidden, G(g, "head.bbr.w"),
                        G(g, "head.bbr.b"));
  for (std::size_t i = 0; i < d_hidden.size(); ++i)
    if (!(c.hidden[i] > 0.0f)) d_hidden[i] = 0.0f;
  T d_reduced(c.reduced.h, c.reduced.w, c.reduced.c);
  dense_backward<float>(c.reduced.data, P(m, "head.fc.w"), d_hidden, d_reduced.data,
                        G(g, "head.fc.w"), G(g, "head.fc.b"));
  relu_backward_inplace(c.reduced, d_reduced);
  T d_aligned(c.aligned.h, c.aligned.w, c.aligned.c);
  conv2d_backward<float>(c.aligned, pointwise(c.aligned.c, cfg.head_reduce_channels),
                         P(m, "head.reduce.w"), d_reduced, &d_aligned, G(g, "head.reduce.w"),
                         G(g, "head.reduce.b"));
  roi_align_backward(c.roi, d_aligned, d_feat);
}

Roi refine(const Roi& roi, const std::array<float, 4>& deltas, int h, int w) {
  const BoxParam b = apply_deltas(BoxParam::from_roi(roi), deltas.data());
  return ensure_extent(clip_roi(b.to_roi(), h, w), h, w);
}

PbrCache pbr_forward(const Model& m, const T& feat, const Roi& box, Side side) {
  const auto& cfg = m.config();
  const std::string p = pbr_prefix(side);
  PbrCache c;
  c.geom = band_geometry(box, side, cfg.pbr_k, cfg.pbr_band_pool);
  c.band = pbr_band_extract(feat, c.geom);
  c.side = pbr_side_forward<float>(
      c.band, {P(m, p + ".conv.w"), P(m, p + ".conv.b"), P(m, p + ".score.w")}, cfg.pbr_k);
  return c;
}

void pbr_backward(const Model& m, const PbrCache& c, float d_offset, T& d_feat, Grads& g) {
  const std::string p = pbr_prefix(c.geom.side);
  const T d_band = pbr_side_backward<float>(
      c.band, {P(m, p + ".conv.w"), P(m, p + ".conv.b"), P(m, p + ".score.w")}, c.side,
      c.geom.k, d_offset, {G(g, p + ".conv.w"), G(g, p + ".conv.b"), G(g, p + ".score.w")});
  pbr_band_backward(c.geom, d_band, d_feat);
}

int outward_sign(Side s) { return s == Side::right || s == Side::bottom ? 1 : -1; }

int snapped_boundary(const PbrCache& c) {
  return static_cast<int>(
      std::floor(c.geom.boundary + outward_sign(c.geom.side) * static_cast<double>(c.side.offset) + 0.5));
}

T mask_forward(const Model& m, const T& feat) {
  return conv2d_forward<float>(feat, pointwise(feat.c, 1), P(m, "mask.w"), P(m, "mask.b"));
}

void mask_backward(const Model& m, const T& feat, const T& d_logits, T& d_feat, Grads& g) {
  conv2d_backward<float>(feat, pointwise(feat.c, 1), P(m, "mask.w"), d_logits, &d_feat,
                         G(g, "mask.w"), G(g, "mask.b"));
}

}  // namespace sheetscan::neuro::net
