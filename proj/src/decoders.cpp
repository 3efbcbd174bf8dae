// SPDX-License-Identifier: Apache-2.0
#include "gazedec/decoders.hpp"

#include <algorithm>

#include "gazedec/errors.hpp"

namespace gazedec {

FixedBoxPrior fit_fixed_box_prior(std::span<const Run> runs,
                                  const std::string& video_id) {
  double w = 0.0, h = 0.0;
  std::size_t n = 0;
  for (const auto& run : runs) {
    if (run.meta.video_id != video_id) continue;
    for (const auto& r : run.records) {
      if (!r.target_box) continue;
      w += r.target_box->width();
      h += r.target_box->height();
      ++n;
    }
  }
  if (n == 0)
    throw DomainError("no target-box labels for video '" + video_id + "'");
  return {w / static_cast<double>(n), h / static_cast<double>(n)};
}

BBox decode_fixed_box(const Point& gaze, const FixedBoxPrior& prior,
                      const VideoMeta& meta) {
  const BBox raw{gaze.x - prior.mean_width / 2.0, gaze.y - prior.mean_height / 2.0,
                 gaze.x + prior.mean_width / 2.0, gaze.y + prior.mean_height / 2.0};
  return raw.clipped_to(meta.width, meta.height);
}

namespace {

/// Best containing detection: max confidence, ties to the lower index.
/// Returns -1 when no detection contains the gaze.
int best_containing(const Point& gaze, std::span<const Detection> detections) {
  int best = -1;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (!detections[i].box.contains(gaze)) continue;
    if (best < 0 || detections[i].confidence > detections[best].confidence)
      best = static_cast<int>(i);
  }
  return best;
}

void require_candidates(std::span<const Detection> detections) {
  if (detections.empty()) throw DomainError("no candidate detections for frame");
}

}  // namespace

BBox decode_od_baseline(const Point& gaze, std::span<const Detection> detections,
                        RngStream& rng) {
  require_candidates(detections);
  const int hit = best_containing(gaze, detections);
  if (hit >= 0) return detections[hit].box;
  return detections[rng.uniform_index(detections.size())].box;
}

BBox decode_od_mod(const Point& gaze, std::span<const Detection> detections) {
  require_candidates(detections);
  const int hit = best_containing(gaze, detections);
  if (hit >= 0) return detections[hit].box;

  int best = 0;
  double best_dist = distance_to_box(gaze, detections[0].box);
  for (std::size_t i = 1; i < detections.size(); ++i) {
    const double d = distance_to_box(gaze, detections[i].box);
    if (d < best_dist ||
        (d == best_dist && detections[i].confidence > detections[best].confidence)) {
      best = static_cast<int>(i);
      best_dist = d;
    }
  }
  return detections[best].box;
}

BBox decode_od_oracle(const BBox& true_box, std::span<const Detection> detections) {
  require_candidates(detections);
  int best = 0;
  double best_iou = iou(detections[0].box, true_box);
  for (std::size_t i = 1; i < detections.size(); ++i) {
    const double v = iou(detections[i].box, true_box);
    if (v > best_iou) {
      best = static_cast<int>(i);
      best_iou = v;
    }
  }
  return detections[best].box;
}

}  // namespace gazedec
