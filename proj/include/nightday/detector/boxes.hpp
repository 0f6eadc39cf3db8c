#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"

namespace nightday::detector {

/// Prior box in normalized center form. Not clamped: w and h may exceed 1.
struct Anchor {
  double cx = 0, cy = 0, w = 0, h = 0;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct Variances {
  double center = 0.1;
  double size = 0.2;
};

using Offsets = std::array<double, 4>;  // (dcx, dcy, dw, dh)

inline Box to_corner(const Anchor& a) {
  return {a.cx - a.w / 2, a.cy - a.h / 2, a.cx + a.w / 2, a.cy + a.h / 2};
}

/// Intersection over union; zero-area boxes have IoU 0 with everything.
inline double iou(const Box& a, const Box& b) {
  const double area_a = a.area(), area_b = b.area();
  if (area_a <= 0 || area_b <= 0) return 0.0;
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

inline Offsets encode_box(const Box& gt, const Anchor& anchor, Variances v = {}) {
  const double gw = gt.width(), gh = gt.height();
  if (!(gw > 0) || !(gh > 0)) throw ValidationError("encode_box: ground-truth box has non-positive extent");
  const double gcx = (gt.x_min + gt.x_max) / 2, gcy = (gt.y_min + gt.y_max) / 2;
  return {(gcx - anchor.cx) / (anchor.w * v.center), (gcy - anchor.cy) / (anchor.h * v.center),
          std::log(gw / anchor.w) / v.size, std::log(gh / anchor.h) / v.size};
}

/// Exact inverse of encode_box, without clamping.
inline Box decode_box_unclamped(const Offsets& o, const Anchor& anchor, Variances v = {}) {
  for (double x : o) {
    if (!std::isfinite(x)) throw NumericError("decode_box: non-finite offset");
  }
  const double cx = anchor.cx + o[0] * v.center * anchor.w;
  const double cy = anchor.cy + o[1] * v.center * anchor.h;
  const double w = anchor.w * std::exp(o[2] * v.size);
  const double h = anchor.h * std::exp(o[3] * v.size);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

inline Box clamp_unit(const Box& b) {
  return {std::clamp(b.x_min, 0.0, 1.0), std::clamp(b.y_min, 0.0, 1.0), std::clamp(b.x_max, 0.0, 1.0),
          std::clamp(b.y_max, 0.0, 1.0)};
}

inline Box decode_box(const Offsets& o, const Anchor& anchor, Variances v = {}) {
  return clamp_unit(decode_box_unclamped(o, anchor, v));
}

}  // namespace nightday::detector
