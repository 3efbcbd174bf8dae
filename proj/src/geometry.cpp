// SPDX-License-Identifier: Apache-2.0
#include "gazedec/geometry.hpp"

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

BBox enclosing(const BBox& a, const BBox& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
          std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

void require_defined(const BBox& a, const BBox& b, const char* metric) {
  if (a.degenerate() && b.degenerate())
    throw MetricError(std::string(metric) + " undefined: both boxes have zero area");
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  require_defined(a, b, "iou");
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
  require_defined(a, b, "giou");
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull = enclosing(a, b).area();
  return inter / uni - (hull - uni) / hull;
}

double ciou(const BBox& a, const BBox& b) {
  require_defined(a, b, "ciou");
  const double base = iou(a, b);

  const Point ca = a.center();
  const Point cb = b.center();
  const double center_dist2 =
      (ca.x - cb.x) * (ca.x - cb.x) + (ca.y - cb.y) * (ca.y - cb.y);
  const BBox hull = enclosing(a, b);
  const double diag2 =
      hull.width() * hull.width() + hull.height() * hull.height();

  // atan2 keeps the aspect term defined for zero-size boxes.
  constexpr double kFourOverPi2 = 4.0 / (M_PI * M_PI);
  const double d = std::atan2(a.width(), a.height()) - std::atan2(b.width(), b.height());
  const double v = kFourOverPi2 * d * d;
  const double alpha = v <= 0.0 ? 0.0 : v / ((1.0 - base) + v);

  return base - center_dist2 / diag2 - alpha * v;
}

double distance_to_box(const Point& p, const BBox& b) {
  const double dx = std::max({b.x_min - p.x, 0.0, p.x - b.x_max});
  const double dy = std::max({b.y_min - p.y, 0.0, p.y - b.y_max});
  return std::hypot(dx, dy);
}

}  // namespace gazedec
