// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/box_coding.hpp"

#include <algorithm>
#include <cmath>

#include "sheetscan/error.hpp"

namespace sheetscan::neuro {
namespace {

void require_extent(const BoxParam& b, const char* what) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) {
    throw ValidationError(std::string(what) + " must have positive width and height");
  }
}

double gate(double d, double k) { return std::abs(d) < k ? 1.0 : 0.0; }

}  // namespace

BoxParam BoxParam::from_bbox(const BBox& b) {
  return {(b.col_left + b.col_right) / 2.0, (b.row_top + b.row_bottom) / 2.0,
          static_cast<double>(b.width()), static_cast<double>(b.height())};
}

BoxParam BoxParam::from_roi(const Roi& r) {
  return {(r.x0 + r.x1) / 2.0, (r.y0 + r.y1) / 2.0, r.x1 - r.x0, r.y1 - r.y0};
}

BBox BoxParam::to_bbox() const {
  const auto edge = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  BBox b{edge(x - w / 2 + 0.5), edge(y - h / 2 + 0.5), edge(x + w / 2 - 0.5),
         edge(y + h / 2 - 0.5)};
  if (b.col_right < b.col_left) b.col_left = b.col_right = edge(x);
  if (b.row_bottom < b.row_top) b.row_top = b.row_bottom = edge(y);
  return b;
}

std::vector<Anchor> generate_anchors(int feat_h, int feat_w, const ModelConfig& cfg) {
  std::vector<Anchor> out;
  if (feat_h <= 0 || feat_w <= 0) return out;
  out.reserve(static_cast<std::size_t>(feat_h) * feat_w * cfg.anchors_per_position());
  for (int i = 0; i < feat_h; ++i) {
    for (int j = 0; j < feat_w; ++j) {
      for (std::size_t s = 0; s < cfg.anchor_scales.size(); ++s) {
        for (std::size_t r = 0; r < cfg.anchor_ratios.size(); ++r) {
          const double root = std::sqrt(cfg.anchor_ratios[r]);
          out.push_back({{j + 1.0, i + 1.0, cfg.anchor_scales[s] * root,
                          cfg.anchor_scales[s] / root},
                         static_cast<int>(s),
                         static_cast<int>(r)});
        }
      }
    }
  }
  return out;
}

BbrTargets bbr_encode(const BoxParam& b, const BoxParam& a) {
  require_extent(b, "box");
  require_extent(a, "anchor");
  return {(b.x - a.x) / a.w, (b.y - a.y) / a.h, std::log(b.w / a.w), std::log(b.h / a.h)};
}

BoxParam bbr_decode(const BbrTargets& t, const BoxParam& a) {
  return {a.x + t[0] * a.w, a.y + t[1] * a.h, a.w * std::exp(t[2]), a.h * std::exp(t[3])};
}

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (x >= 1.0) return 1.0;
  if (x <= -1.0) return -1.0;
  return x;
}

LossAndGrad bbr_loss(const BbrTargets& t, const BbrTargets& t_star) {
  LossAndGrad r;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = t[i] - t_star[i];
    r.loss += smooth_l1(d);
    r.grad[i] = smooth_l1_grad(d);
  }
  return r;
}

LossAndGrad bbr_loss_box(const BoxParam& b, const BoxParam& b_star, const BoxParam& a) {
  LossAndGrad r = bbr_loss(bbr_encode(b, a), bbr_encode(b_star, a));
  // dt_x/dx = 1/w_a, dt_w/dw = 1/w.
  r.grad = {r.grad[0] / a.w, r.grad[1] / a.h, r.grad[2] / b.w, r.grad[3] / b.h};
  return r;
}

double bbr_grad_x_closed(double x, double x_star, double w_a) {
  const double d = x - x_star;
  if (d >= w_a) return 1.0 / w_a;
  if (d <= -w_a) return -1.0 / w_a;
  return d / (w_a * w_a);
}

double bbr_grad_w_closed(double w, double w_star) {
  constexpr double e = 2.718281828459045;
  if (w >= e * w_star) return 1.0 / w;
  if (w <= w_star / e) return -1.0 / w;
  return std::log(w / w_star) / w;
}

PbrTargets pbr_targets(const BoxParam& b, const BoxParam& a) {
  return {b.x - a.x - b.w / 2, b.y - a.y - b.h / 2, b.x - a.x + b.w / 2, b.y - a.y + b.h / 2};
}

BoxParam pbr_decode(const PbrTargets& t, const BoxParam& a) {
  return {a.x + (t[0] + t[2]) / 2, a.y + (t[1] + t[3]) / 2, t[2] - t[0], t[3] - t[1]};
}

double robust_loss(double x, double k) {
  if (!(k > 0.0)) throw ValidationError("robust_loss: k must be positive");
  return std::abs(x) < k ? 0.5 * x * x : 0.5 * k * k;
}

double robust_loss_grad(double x, double k) { return x * gate(x, k); }

LossAndGrad pbr_loss(const PbrTargets& t, const PbrTargets& t_star, double k) {
  LossAndGrad r;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = t[i] - t_star[i];
    r.loss += robust_loss(d, k);
    r.grad[i] = robust_loss_grad(d, k);
  }
  return r;
}

LossAndGrad pbr_loss_box(const BoxParam& b, const BoxParam& b_star, const BoxParam& a,
                         double k) {
  LossAndGrad r = pbr_loss(pbr_targets(b, a), pbr_targets(b_star, a), k);
  const auto& g = r.grad;  // left, top, right, bottom
  r.grad = {g[0] + g[2], g[1] + g[3], -0.5 * g[0] + 0.5 * g[2], -0.5 * g[1] + 0.5 * g[3]};
  return r;
}

double pbr_grad_x_closed(double d_left, double d_right, double k) {
  return d_left * gate(d_left, k) + d_right * gate(d_right, k);
}

double pbr_grad_w_closed(double d_left, double d_right, double k) {
  return -d_left / 2 * gate(d_left, k) + d_right / 2 * gate(d_right, k);
}

double roi_iou(const Roi& a, const Roi& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.width() * a.height() + b.width() * b.height() - inter);
}

}  // namespace sheetscan::neuro
