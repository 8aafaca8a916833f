// SPDX-License-Identifier: Apache-2.0
//
// Differentiable building blocks. Every kernel is templated on the scalar
// type: the detector runs in float, gradient checks instantiate double.
// Backward functions accumulate (+=) into the gradient buffers they are given.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sheetscan/error.hpp"
#include "sheetscan/neuro/tensor.hpp"

namespace sheetscan::neuro {

/// Kernel geometry. Weights are laid out [ky][kx][c_in][c_out].
struct ConvSpec {
  int kh = 3;
  int kw = 3;
  int c_in = 0;
  int c_out = 0;
  int dilation = 1;

  std::size_t weight_count() const noexcept {
    return static_cast<std::size_t>(kh) * kw * c_in * c_out;
  }
};

namespace detail {

inline void check_conv(const ConvSpec& s, int in_c, std::size_t wsize, std::size_t bsize,
                       const std::string& in_shape) {
  if (s.kh % 2 == 0 || s.kw % 2 == 0 || s.dilation < 1) {
    throw ValidationError("conv: kernel sides must be odd and dilation positive");
  }
  if (in_c != s.c_in || wsize != s.weight_count() || bsize != static_cast<std::size_t>(s.c_out)) {
    throw ValidationError("conv: input " + in_shape + " does not fit kernel " +
                          std::to_string(s.kh) + "x" + std::to_string(s.kw) + "x" +
                          std::to_string(s.c_in) + "x" + std::to_string(s.c_out) + " (weights " +
                          std::to_string(wsize) + ", bias " + std::to_string(bsize) + ")");
  }
}

}  // namespace detail

/// Stride-1 cross-correlation with zero padding; output has the input's
/// spatial size.
template <class R>
Tensor<R> conv2d_forward(const Tensor<R>& in, const ConvSpec& s, std::span<const R> weight,
                         std::span<const R> bias) {
  detail::check_conv(s, in.c, weight.size(), bias.size(), in.shape_string());
  Tensor<R> out(in.h, in.w, s.c_out);
  const int oy = s.kh / 2;
  const int ox = s.kw / 2;
  const int co_n = s.c_out;
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      R* o = out.pixel(y, x);
      for (int co = 0; co < co_n; ++co) o[co] = bias[static_cast<std::size_t>(co)];
      for (int ky = 0; ky < s.kh; ++ky) {
        const int iy = y + (ky - oy) * s.dilation;
        if (iy < 0 || iy >= in.h) continue;
        for (int kx = 0; kx < s.kw; ++kx) {
          const int ix = x + (kx - ox) * s.dilation;
          if (ix < 0 || ix >= in.w) continue;
          const R* ip = in.pixel(iy, ix);
          const R* wp = weight.data() + static_cast<std::size_t>(ky * s.kw + kx) * s.c_in * co_n;
          for (int ci = 0; ci < s.c_in; ++ci) {
            const R a = ip[ci];
            if (a == R(0)) continue;
            const R* wr = wp + static_cast<std::size_t>(ci) * co_n;
            for (int co = 0; co < co_n; ++co) o[co] += a * wr[co];
          }
        }
      }
    }
  }
  return out;
}

/// Gradients of conv2d_forward. `d_in` may be null when the input gradient
/// is not needed; otherwise it must have the input's shape.
template <class R>
void conv2d_backward(const Tensor<R>& in, const ConvSpec& s, std::span<const R> weight,
                     const Tensor<R>& d_out, Tensor<R>* d_in, std::span<R> d_weight,
                     std::span<R> d_bias) {
  detail::check_conv(s, in.c, weight.size(), d_bias.size(), in.shape_string());
  if (d_out.h != in.h || d_out.w != in.w || d_out.c != s.c_out) {
    throw ValidationError("conv: output gradient " + d_out.shape_string() +
                          " does not match input " + in.shape_string());
  }
  if (d_weight.size() != weight.size()) throw ValidationError("conv: weight gradient size");
  if (d_in != nullptr && !d_in->same_shape(in)) {
    throw ValidationError("conv: input gradient " + d_in->shape_string() + " vs input " +
                          in.shape_string());
  }
  const int oy = s.kh / 2;
  const int ox = s.kw / 2;
  const int co_n = s.c_out;
  const int ci_n = s.c_in;
  // [ky][kx][c_out][c_in] so the input-gradient update is a contiguous axpy.
  std::vector<R> wt;
  if (d_in != nullptr) {
    wt.resize(weight.size());
    for (int k = 0; k < s.kh * s.kw; ++k)
      for (int ci = 0; ci < ci_n; ++ci)
        for (int co = 0; co < co_n; ++co)
          wt[(static_cast<std::size_t>(k) * co_n + co) * ci_n + ci] =
              weight[(static_cast<std::size_t>(k) * ci_n + ci) * co_n + co];
  }
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const R* g = d_out.pixel(y, x);
      bool any = false;
      for (int co = 0; co < co_n; ++co) {
        if (g[co] != R(0)) {
          any = true;
          break;
        }
      }
      if (!any) continue;
      for (int co = 0; co < co_n; ++co) d_bias[static_cast<std::size_t>(co)] += g[co];
      for (int ky = 0; ky < s.kh; ++ky) {
        const int iy = y + (ky - oy) * s.dilation;
        if (iy < 0 || iy >= in.h) continue;
        for (int kx = 0; kx < s.kw; ++kx) {
          const int ix = x + (kx - ox) * s.dilation;
          if (ix < 0 || ix >= in.w) continue;
          const std::size_t k = static_cast<std::size_t>(ky * s.kw + kx);
          const R* ip = in.pixel(iy, ix);
          R* dwp = d_weight.data() + k * ci_n * co_n;
          for (int ci = 0; ci < ci_n; ++ci) {
            const R a = ip[ci];
            if (a == R(0)) continue;
            R* dwr = dwp + static_cast<std::size_t>(ci) * co_n;
            for (int co = 0; co < co_n; ++co) dwr[co] += a * g[co];
          }
          if (d_in != nullptr) {
            R* dip = d_in->pixel(iy, ix);
            const R* wtp = wt.data() + k * co_n * ci_n;
            for (int co = 0; co < co_n; ++co) {
              const R gc = g[co];
              if (gc == R(0)) continue;
              const R* wr = wtp + static_cast<std::size_t>(co) * ci_n;
              for (int ci = 0; ci < ci_n; ++ci) dip[ci] += gc * wr[ci];
            }
          }
        }
      }
    }
  }
}

template <class R>
void relu_inplace(Tensor<R>& t) {
  for (auto& v : t.data) v = v > R(0) ? v : R(0);
}

/// Zeroes gradient entries whose forward activation was not positive.
template <class R>
void relu_backward_inplace(const Tensor<R>& activated, Tensor<R>& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(activated.data[i] > R(0))) grad.data[i] = R(0);
}

/// y = b + x W with W laid out [n_in][n_out].
template <class R>
std::vector<R> dense_forward(std::span<const R> x, std::span<const R> weight,
                             std::span<const R> bias) {
  const std::size_t n_out = bias.size();
  if (weight.size() != x.size() * n_out) {
    throw ValidationError("dense: input " + std::to_string(x.size()) + " x output " +
                          std::to_string(n_out) + " does not match " +
                          std::to_string(weight.size()) + " weights");
  }
  std::vector<R> y(bias.begin(), bias.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const R a = x[i];
    if (a == R(0)) continue;
    const R* wr = weight.data() + i * n_out;
    for (std::size_t o = 0; o < n_out; ++o) y[o] += a * wr[o];
  }
  return y;
}

template <class R>
void dense_backward(std::span<const R> x, std::span<const R> weight, std::span<const R> d_y,
                    std::span<R> d_x, std::span<R> d_weight, std::span<R> d_bias) {
  const std::size_t n_out = d_y.size();
  for (std::size_t o = 0; o < n_out; ++o) d_bias[o] += d_y[o];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const R* wr = weight.data() + i * n_out;
    R* dwr = d_weight.data() + i * n_out;
    R acc = R(0);
    for (std::size_t o = 0; o < n_out; ++o) {
      acc += wr[o] * d_y[o];
      dwr[o] += x[i] * d_y[o];
    }
    if (!d_x.empty()) d_x[i] += acc;
  }
}

/// Region in continuous sheet coordinates: cell (r, c) occupies
/// [c-0.5, c+0.5] x [r-0.5, r+0.5], so feature index (i, j) sits at (i+1, j+1).
struct Roi {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
};

namespace detail {

struct Tap {
  int lo;         // lower feature index
  double w_hi;    // weight of lo+1; lo gets 1 - w_hi
};

inline Tap tap_at(double coord) {
  const double f = coord - 1.0;
  const double lo = std::floor(f);
  return {static_cast<int>(lo), f - lo};
}

inline void check_roi(const Roi& roi, int out_h, int out_w) {
  if (!(roi.width() > 0.0) || !(roi.height() > 0.0)) {
    throw ValidationError("roi_align: degenerate region");
  }
  if (out_h < 1 || out_w < 1) throw ValidationError("roi_align: output size must be positive");
}

}  // namespace detail

/// One bilinear sample at each bin center; samples outside the map read 0.
template <class R>
Tensor<R> roi_align(const Tensor<R>& feat, const Roi& roi, int out_h, int out_w) {
  detail::check_roi(roi, out_h, out_w);
  Tensor<R> out(out_h, out_w, feat.c);
  const double bh = roi.height() / out_h;
  const double bw = roi.width() / out_w;
  for (int i = 0; i < out_h; ++i) {
    const auto ty = detail::tap_at(roi.y0 + (i + 0.5) * bh);
    for (int j = 0; j < out_w; ++j) {
      const auto tx = detail::tap_at(roi.x0 + (j + 0.5) * bw);
      R* o = out.pixel(i, j);
      for (int dy = 0; dy < 2; ++dy) {
        const int y = ty.lo + dy;
        const double wy = dy == 0 ? 1.0 - ty.w_hi : ty.w_hi;
        if (y < 0 || y >= feat.h || wy == 0.0) continue;
        for (int dx = 0; dx < 2; ++dx) {
          const int x = tx.lo + dx;
          const double wx = dx == 0 ? 1.0 - tx.w_hi : tx.w_hi;
          if (x < 0 || x >= feat.w || wx == 0.0) continue;
          const R wgt = static_cast<R>(wy * wx);
          const R* f = feat.pixel(y, x);
          for (int ch = 0; ch < feat.c; ++ch) o[ch] += wgt * f[ch];
        }
      }
    }
  }
  return out;
}

template <class R>
void roi_align_backward(const Roi& roi, const Tensor<R>& d_out, Tensor<R>& d_feat) {
  detail::check_roi(roi, d_out.h, d_out.w);
  const double bh = roi.height() / d_out.h;
  const double bw = roi.width() / d_out.w;
  for (int i = 0; i < d_out.h; ++i) {
    const auto ty = detail::tap_at(roi.y0 + (i + 0.5) * bh);
    for (int j = 0; j < d_out.w; ++j) {
      const auto tx = detail::tap_at(roi.x0 + (j + 0.5) * bw);
      const R* g = d_out.pixel(i, j);
      for (int dy = 0; dy < 2; ++dy) {
        const int y = ty.lo + dy;
        const double wy = dy == 0 ? 1.0 - ty.w_hi : ty.w_hi;
        if (y < 0 || y >= d_feat.h || wy == 0.0) continue;
        for (int dx = 0; dx < 2; ++dx) {
          const int x = tx.lo + dx;
          const double wx = dx == 0 ? 1.0 - tx.w_hi : tx.w_hi;
          if (x < 0 || x >= d_feat.w || wx == 0.0) continue;
          const R wgt = static_cast<R>(wy * wx);
          R* f = d_feat.pixel(y, x);
          for (int ch = 0; ch < d_out.c; ++ch) f[ch] += wgt * g[ch];
        }
      }
    }
  }
}

enum class Side { left = 0, top = 1, right = 2, bottom = 3 };
inline constexpr Side kSides[] = {Side::left, Side::top, Side::right, Side::bottom};
const char* side_name(Side s);

/// Where a boundary band is sampled. `boundary` is the 1-based row/column
/// currently holding the box edge.
struct BandGeometry {
  Side side = Side::left;
  int boundary = 1;
  int k = 1;
  int pool = 1;
  Roi roi;
};

/// Rounds the box edge on `side` to its cell and lays out a band of 2k cells
/// across it at native resolution; the orthogonal extent spans the box.
BandGeometry band_geometry(const Roi& box, Side side, int k, int pool);

/// pool x 2k x C band around one box edge. Index j runs from inside the box
/// to outside; j = k-1 is the boundary cell, so an offset of j-(k-1) moves
/// the boundary outward by that many cells.
template <class R>
Tensor<R> pbr_band_extract(const Tensor<R>& feat, const BandGeometry& g) {
  const bool vertical = g.side == Side::top || g.side == Side::bottom;
  const bool reversed = g.side == Side::left || g.side == Side::top;
  const int n = 2 * g.k;
  const Tensor<R> raw =
      vertical ? roi_align(feat, g.roi, n, g.pool) : roi_align(feat, g.roi, g.pool, n);
  Tensor<R> band(g.pool, n, feat.c);
  for (int p = 0; p < g.pool; ++p) {
    for (int j = 0; j < n; ++j) {
      const int s = reversed ? n - 1 - j : j;
      const R* src = vertical ? raw.pixel(s, p) : raw.pixel(p, s);
      std::copy(src, src + feat.c, band.pixel(p, j));
    }
  }
  return band;
}

template <class R>
Tensor<R> pbr_band_extract(const Tensor<R>& feat, const Roi& box, Side side, int k, int pool) {
  return pbr_band_extract(feat, band_geometry(box, side, k, pool));
}

template <class R>
void pbr_band_backward(const BandGeometry& g, const Tensor<R>& d_band, Tensor<R>& d_feat) {
  const bool vertical = g.side == Side::top || g.side == Side::bottom;
  const bool reversed = g.side == Side::left || g.side == Side::top;
  const int n = 2 * g.k;
  Tensor<R> raw = vertical ? Tensor<R>(n, g.pool, d_band.c) : Tensor<R>(g.pool, n, d_band.c);
  for (int p = 0; p < g.pool; ++p) {
    for (int j = 0; j < n; ++j) {
      const int s = reversed ? n - 1 - j : j;
      const R* src = d_band.pixel(p, j);
      std::copy(src, src + d_band.c, vertical ? raw.pixel(s, p) : raw.pixel(p, s));
    }
  }
  roi_align_backward(g.roi, raw, d_feat);
}

/// Boundary head for one side. A 1x3 convolution along the regression
/// direction (M hidden units, ReLU) feeds a per-position score
/// s_j = sum_{p,m} W2[p][m] H[p][j][m]; the offset is the softmax-weighted
/// mean of j-(k-1).
template <class R>
struct PbrSideParams {
  std::span<const R> conv_w;  // [1][3][C][M]
  std::span<const R> conv_b;  // [M]
  std::span<const R> score_w; // [pool][M]
};

template <class R>
struct PbrSideGrads {
  std::span<R> conv_w;
  std::span<R> conv_b;
  std::span<R> score_w;
};

template <class R>
struct PbrSideCache {
  Tensor<R> hidden;       // post-ReLU, pool x 2k x M
  std::vector<R> probs;   // 2k
  R offset = R(0);
};

template <class R>
PbrSideCache<R> pbr_side_forward(const Tensor<R>& band, const PbrSideParams<R>& p, int k) {
  const int m = static_cast<int>(p.conv_b.size());
  const ConvSpec spec{1, 3, band.c, m, 1};
  PbrSideCache<R> cache;
  cache.hidden = conv2d_forward<R>(band, spec, p.conv_w, p.conv_b);
  relu_inplace(cache.hidden);
  const int n = 2 * k;
  if (band.w != n || p.score_w.size() != static_cast<std::size_t>(band.h) * m) {
    throw ValidationError("pbr head: band " + band.shape_string() + " does not match k=" +
                          std::to_string(k));
  }
  std::vector<R> logits(static_cast<std::size_t>(n), R(0));
  for (int q = 0; q < band.h; ++q) {
    const R* wrow = p.score_w.data() + static_cast<std::size_t>(q) * m;
    for (int j = 0; j < n; ++j) {
      const R* h = cache.hidden.pixel(q, j);
      R acc = R(0);
      for (int u = 0; u < m; ++u) acc += wrow[u] * h[u];
      logits[static_cast<std::size_t>(j)] += acc;
    }
  }
  const R top = *std::max_element(logits.begin(), logits.end());
  cache.probs.resize(logits.size());
  R z = R(0);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    cache.probs[j] = std::exp(logits[j] - top);
    z += cache.probs[j];
  }
  cache.offset = R(0);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    cache.probs[j] /= z;
    cache.offset += cache.probs[j] * static_cast<R>(static_cast<int>(j) - (k - 1));
  }
  return cache;
}

/// Backpropagates dL/d(offset); returns dL/d(band).
template <class R>
Tensor<R> pbr_side_backward(const Tensor<R>& band, const PbrSideParams<R>& p,
                            const PbrSideCache<R>& cache, int k, R d_offset,
                            const PbrSideGrads<R>& g) {
  const int m = static_cast<int>(p.conv_b.size());
  const int n = 2 * k;
  std::vector<R> d_logits(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const R o = static_cast<R>(j - (k - 1));
    d_logits[static_cast<std::size_t>(j)] =
        d_offset * cache.probs[static_cast<std::size_t>(j)] * (o - cache.offset);
  }
  Tensor<R> d_hidden(band.h, n, m);
  for (int q = 0; q < band.h; ++q) {
    const R* wrow = p.score_w.data() + static_cast<std::size_t>(q) * m;
    R* dwrow = g.score_w.data() + static_cast<std::size_t>(q) * m;
    for (int j = 0; j < n; ++j) {
      const R dl = d_logits[static_cast<std::size_t>(j)];
      const R* h = cache.hidden.pixel(q, j);
      R* dh = d_hidden.pixel(q, j);
      for (int u = 0; u < m; ++u) {
        dwrow[u] += dl * h[u];
        dh[u] = h[u] > R(0) ? dl * wrow[u] : R(0);
      }
    }
  }
  Tensor<R> d_band(band.h, band.w, band.c);
  const ConvSpec spec{1, 3, band.c, m, 1};
  conv2d_backward<R>(band, spec, p.conv_w, d_hidden, &d_band, g.conv_w, g.conv_b);
  return d_band;
}

template <class R>
R sigmoid(R x) {
  if (x >= R(0)) return R(1) / (R(1) + std::exp(-x));
  const R e = std::exp(x);
  return e / (R(1) + e);
}

/// Numerically stable binary cross-entropy on a logit; gradient is
/// sigmoid(logit) - target.
template <class R>
R bce_with_logit(R logit, R target) {
  const R pos = logit > R(0) ? logit : R(0);
  return pos - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace sheetscan::neuro
