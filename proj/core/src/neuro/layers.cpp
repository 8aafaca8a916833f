// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/layers.hpp"

namespace sheetscan::neuro {
namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

const char* side_name(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::top: return "top";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
  }
  return "?";
}

BandGeometry band_geometry(const Roi& box, Side side, int k, int pool) {
  if (k < 1 || pool < 1) throw ValidationError("pbr band: k and pool must be positive");
  BandGeometry g;
  g.side = side;
  g.k = k;
  g.pool = pool;
  g.roi = box;
  switch (side) {
    case Side::left:
      g.boundary = round_half_up(box.x0 + 0.5);
      g.roi.x0 = g.boundary - k - 0.5;
      g.roi.x1 = g.boundary + k - 0.5;
      break;
    case Side::right:
      g.boundary = round_half_up(box.x1 - 0.5);
      g.roi.x0 = g.boundary - k + 0.5;
      g.roi.x1 = g.boundary + k + 0.5;
      break;
    case Side::top:
      g.boundary = round_half_up(box.y0 + 0.5);
      g.roi.y0 = g.boundary - k - 0.5;
      g.roi.y1 = g.boundary + k - 0.5;
      break;
    case Side::bottom:
      g.boundary = round_half_up(box.y1 - 0.5);
      g.roi.y0 = g.boundary - k + 0.5;
      g.roi.y1 = g.boundary + k + 0.5;
      break;
  }
  return g;
}

}  // namespace sheetscan::neuro
