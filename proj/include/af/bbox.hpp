#pragma once

#include <algorithm>

namespace af {

/// Axis-aligned box in pixel coordinates, (xmin, ymin) top-left and
/// (xmax, ymax) bottom-right. Zero-area boxes are legal.
struct BBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }

  bool valid() const { return xmin <= xmax && ymin <= ymax; }

  bool operator==(const BBox&) const = default;
};

inline double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double h = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// Intersection over union. Degenerate inputs (zero union area) yield 0.
inline double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

/// Clip a box to the [0,width] x [0,height] image extent.
inline BBox clamp_bbox(const BBox& b, double width, double height) {
  BBox out;
  out.xmin = std::clamp(b.xmin, 0.0, width);
  out.ymin = std::clamp(b.ymin, 0.0, height);
  out.xmax = std::clamp(b.xmax, 0.0, width);
  out.ymax = std::clamp(b.ymax, 0.0, height);
  return out;
}

}  // namespace af
