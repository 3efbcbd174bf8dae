// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "gazedec/errors.hpp"

namespace gazedec::nn {

enum class LossKind { L1, GIOU, CIOU };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

/// Box corners (x_min, y_min, x_max, y_max) in normalized [0, 1] space.
template <class S>
using Corners = std::array<S, 4>;

template <class S>
struct LossGrad {
  S value = S(0);
  Corners<S> d_pred{};  // d value / d pred corner
  S ciou_alpha = S(0);  // trade-off coefficient used (CIoU only)
};

namespace detail_loss {

template <class S>
struct BoxTerms {
  S inter, uni, iou, hull_w, hull_h, hull;
  std::array<S, 4> d_inter, d_uni, d_hull;
};

/// Shared IoU/union/enclosing-box differentials against the four predicted
/// corners; the truth box is a constant.
template <class S>
BoxTerms<S> box_terms(const Corners<S>& p, const Corners<S>& t) {
  BoxTerms<S> r{};
  const S iw = std::min(p[2], t[2]) - std::max(p[0], t[0]);
  const S ih = std::min(p[3], t[3]) - std::max(p[1], t[1]);
  const bool overlap = iw > S(0) && ih > S(0);
  r.inter = overlap ? iw * ih : S(0);
  r.d_inter = {S(0), S(0), S(0), S(0)};
  if (overlap) {
    if (p[0] > t[0]) r.d_inter[0] = -ih;
    if (p[2] < t[2]) r.d_inter[2] = ih;
    if (p[1] > t[1]) r.d_inter[1] = -iw;
    if (p[3] < t[3]) r.d_inter[3] = iw;
  }
  const S pw = p[2] - p[0];
  const S ph = p[3] - p[1];
  const S area_t = (t[2] - t[0]) * (t[3] - t[1]);
  r.uni = pw * ph + area_t - r.inter;
  r.d_uni = {-ph - r.d_inter[0], -pw - r.d_inter[1], ph - r.d_inter[2],
             pw - r.d_inter[3]};
  r.iou = r.inter / r.uni;

  r.hull_w = std::max(p[2], t[2]) - std::min(p[0], t[0]);
  r.hull_h = std::max(p[3], t[3]) - std::min(p[1], t[1]);
  r.hull = r.hull_w * r.hull_h;
  r.d_hull = {p[0] < t[0] ? -r.hull_h : S(0), p[1] < t[1] ? -r.hull_w : S(0),
              p[2] > t[2] ? r.hull_h : S(0), p[3] > t[3] ? r.hull_w : S(0)};
  return r;
}

}  // namespace detail_loss

/// Mean absolute coordinate error over the four corners.
template <class S>
LossGrad<S> l1_loss(const Corners<S>& p, const Corners<S>& t) {
  LossGrad<S> r;
  for (int i = 0; i < 4; ++i) {
    const S d = p[i] - t[i];
    r.value += std::abs(d) / S(4);
    r.d_pred[i] = (d > S(0) ? S(1) : d < S(0) ? S(-1) : S(0)) / S(4);
  }
  return r;
}

/// 1 - generalized IoU.
template <class S>
LossGrad<S> giou_loss(const Corners<S>& p, const Corners<S>& t) {
  const auto b = detail_loss::box_terms(p, t);
  LossGrad<S> r;
  // giou = iou - 1 + uni / hull
  r.value = S(1) - (b.iou - S(1) + b.uni / b.hull);
  for (int i = 0; i < 4; ++i) {
    const S d_iou = (b.d_inter[i] * b.uni - b.inter * b.d_uni[i]) / (b.uni * b.uni);
    const S d_ratio =
        (b.d_uni[i] * b.hull - b.uni * b.d_hull[i]) / (b.hull * b.hull);
    r.d_pred[i] = -(d_iou + d_ratio);
  }
  return r;
}

/// 1 - complete IoU. The aspect trade-off coefficient is held constant for
/// differentiation: either the value computed at the current point, or the
/// supplied frozen value (used by the finite-difference verifier so both
/// sides differentiate the same function).
template <class S>
LossGrad<S> ciou_loss(const Corners<S>& p, const Corners<S>& t,
                      std::optional<S> frozen_alpha = std::nullopt) {
  const auto b = detail_loss::box_terms(p, t);
  LossGrad<S> r;

  const S pcx = (p[0] + p[2]) / S(2), pcy = (p[1] + p[3]) / S(2);
  const S tcx = (t[0] + t[2]) / S(2), tcy = (t[1] + t[3]) / S(2);
  const S rho2 = (pcx - tcx) * (pcx - tcx) + (pcy - tcy) * (pcy - tcy);
  const S c2 = b.hull_w * b.hull_w + b.hull_h * b.hull_h;

  const S pw = p[2] - p[0];
  const S ph = p[3] - p[1];
  constexpr double kFourOverPi2 = 4.0 / (M_PI * M_PI);
  const S q = S(std::atan2(double(t[2] - t[0]), double(t[3] - t[1])) -
                std::atan2(double(pw), double(ph)));
  const S v = S(kFourOverPi2) * q * q;
  const S alpha = frozen_alpha ? *frozen_alpha
                               : (v <= S(0) ? S(0) : v / ((S(1) - b.iou) + v));
  r.ciou_alpha = alpha;
  r.value = S(1) - (b.iou - rho2 / c2 - alpha * v);

  const S wh2 = pw * pw + ph * ph;
  const S dv_dw = S(kFourOverPi2) * S(2) * q * (-ph / wh2);
  const S dv_dh = S(kFourOverPi2) * S(2) * q * (pw / wh2);
  const std::array<S, 4> d_v{-dv_dw, -dv_dh, dv_dw, dv_dh};

  const std::array<S, 4> d_rho2{(pcx - tcx), (pcy - tcy), (pcx - tcx),
                                (pcy - tcy)};
  // d c2 via the hull extents
  const std::array<S, 4> d_c2{
      p[0] < t[0] ? S(-2) * b.hull_w : S(0), p[1] < t[1] ? S(-2) * b.hull_h : S(0),
      p[2] > t[2] ? S(2) * b.hull_w : S(0), p[3] > t[3] ? S(2) * b.hull_h : S(0)};

  for (int i = 0; i < 4; ++i) {
    const S d_iou = (b.d_inter[i] * b.uni - b.inter * b.d_uni[i]) / (b.uni * b.uni);
    const S d_dist = (d_rho2[i] * c2 - rho2 * d_c2[i]) / (c2 * c2);
    r.d_pred[i] = -(d_iou - d_dist - alpha * d_v[i]);
  }
  return r;
}

template <class S>
LossGrad<S> box_loss(LossKind kind, const Corners<S>& p, const Corners<S>& t,
                     std::optional<S> frozen_alpha = std::nullopt) {
  switch (kind) {
    case LossKind::L1:
      return l1_loss(p, t);
    case LossKind::GIOU:
      return giou_loss(p, t);
    case LossKind::CIOU:
      return ciou_loss(p, t, frozen_alpha);
  }
  throw DomainError("unknown loss kind");
}

}  // namespace gazedec::nn
