// SPDX-License-Identifier: Apache-2.0
//
// Box parameterizations, anchors, and the two regression losses:
// scale-normalized smooth-L1 regression (BBR) and absolute per-boundary
// regression with a plateaued quadratic (PBR).
#pragma once

#include <array>
#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/neuro/config.hpp"
#include "sheetscan/neuro/layers.hpp"

namespace sheetscan::neuro {

/// Center/extent form in cell units.
struct BoxParam {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  static BoxParam from_bbox(const BBox& b);
  static BoxParam from_roi(const Roi& r);
  /// Nearest integer box; edges that round past each other collapse to one cell.
  BBox to_bbox() const;
  Roi to_roi() const { return {x - w / 2, y - h / 2, x + w / 2, y + h / 2}; }
  bool operator==(const BoxParam&) const = default;
};

struct Anchor {
  BoxParam param;
  int scale_index = 0;
  int ratio_index = 0;
};

/// One anchor per (lattice position, scale, ratio), ordered position-major
/// then scale then ratio. Lattice position (i, j) is centered on cell
/// (i+1, j+1); extents are (scale*sqrt(ratio), scale/sqrt(ratio)).
std::vector<Anchor> generate_anchors(int feat_h, int feat_w, const ModelConfig& cfg);

/// (t_x, t_y, t_w, t_h).
using BbrTargets = std::array<double, 4>;
/// (t_left, t_top, t_right, t_bottom), absolute cell offsets from the anchor center.
using PbrTargets = std::array<double, 4>;

/// Throws ValidationError for non-positive extents.
BbrTargets bbr_encode(const BoxParam& b, const BoxParam& anchor);
BoxParam bbr_decode(const BbrTargets& t, const BoxParam& anchor);

double smooth_l1(double x);
double smooth_l1_grad(double x);

struct LossAndGrad {
  double loss = 0.0;
  std::array<double, 4> grad{};  // w.r.t. the four predicted components
};

/// Sum of smooth-L1 over the component differences; gradient w.r.t. t.
LossAndGrad bbr_loss(const BbrTargets& t, const BbrTargets& t_star);

/// BBR loss of predicted box b against b_star under `anchor`, with the
/// gradient w.r.t. (x, y, w, h) obtained through the encoding.
LossAndGrad bbr_loss_box(const BoxParam& b, const BoxParam& b_star, const BoxParam& anchor);

/// Closed forms of dL/dx and dL/dw for the BBR loss.
double bbr_grad_x_closed(double x, double x_star, double w_a);
double bbr_grad_w_closed(double w, double w_star);

PbrTargets pbr_targets(const BoxParam& b, const BoxParam& anchor);
/// Inverse of pbr_targets.
BoxParam pbr_decode(const PbrTargets& t, const BoxParam& anchor);

double robust_loss(double x, double k);
/// x inside the tolerance, 0 on the plateau (including |x| == k).
double robust_loss_grad(double x, double k);

LossAndGrad pbr_loss(const PbrTargets& t, const PbrTargets& t_star, double k);
/// PBR loss of b against b_star, gradient w.r.t. (x, y, w, h).
LossAndGrad pbr_loss_box(const BoxParam& b, const BoxParam& b_star, const BoxParam& anchor,
                         double k);

/// Closed forms of dL/dx and dL/dw from the boundary deviations
/// d = t - t* on the left and right. Moving the center shifts both edges,
/// widening moves them apart: dL/dx = g_l*d_l + g_r*d_r and
/// dL/dw = -g_l*d_l/2 + g_r*d_r/2, with g the {0,1} tolerance gate.
double pbr_grad_x_closed(double d_left, double d_right, double k);
double pbr_grad_w_closed(double d_left, double d_right, double k);

/// IoU of two continuous regions by area.
double roi_iou(const Roi& a, const Roi& b);

}  // namespace sheetscan::neuro
