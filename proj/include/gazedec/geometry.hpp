// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>

namespace gazedec {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box in pixel coordinates, corner form.
/// Invariant: x_min <= x_max and y_min <= y_max.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool degenerate() const { return area() <= 0.0; }

  /// Closed containment: boundary points count as inside.
  bool contains(const Point& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  /// Convert from (left, top, width, height) as used by track files.
  static BBox from_ltwh(double left, double top, double w, double h) {
    return {left, top, left + w, top + h};
  }

  BBox clipped_to(double frame_w, double frame_h) const {
    return {std::clamp(x_min, 0.0, frame_w), std::clamp(y_min, 0.0, frame_h),
            std::clamp(x_max, 0.0, frame_w), std::clamp(y_max, 0.0, frame_h)};
  }

  bool operator==(const BBox&) const = default;
};

/// Intersection over union in [0, 1]. One degenerate box gives 0;
/// throws MetricError when both boxes have zero area.
double iou(const BBox& a, const BBox& b);

/// Generalized IoU in [-1, 1]: iou minus the enclosing-box penalty.
double giou(const BBox& a, const BBox& b);

/// Complete IoU: iou minus center-distance and aspect-ratio penalties.
double ciou(const BBox& a, const BBox& b);

/// Euclidean distance from p to the nearest point of b; 0 if p is inside
/// or on the boundary.
double distance_to_box(const Point& p, const BBox& b);

}  // namespace gazedec
