// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "gazedec/ingest.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

/// Per-video mean label size used by the fixed-box decoder.
struct FixedBoxPrior {
  double mean_width = 0.0;
  double mean_height = 0.0;
};

/// Mean width/height of all target-box labels for one video across the given
/// runs. Throws DomainError when the video has no labeled frame.
FixedBoxPrior fit_fixed_box_prior(std::span<const Run> runs,
                                  const std::string& video_id);

/// Box of prior size centered on the gaze point, clipped to frame bounds.
BBox decode_fixed_box(const Point& gaze, const FixedBoxPrior& prior,
                      const VideoMeta& meta);

/// Highest-confidence detection containing the gaze point (closed boxes,
/// ties to the lower index); uniformly random detection when none contains
/// it. Throws DomainError on an empty candidate list.
BBox decode_od_baseline(const Point& gaze, std::span<const Detection> detections,
                        RngStream& rng);

/// Same containment rule; when no box contains the gaze, the detection
/// nearest to it wins (ties: higher confidence, then lower index).
BBox decode_od_mod(const Point& gaze, std::span<const Detection> detections);

/// Detection with the highest overlap against the true box (ties to the
/// lower index). Reference upper bound, needs label access.
BBox decode_od_oracle(const BBox& true_box, std::span<const Detection> detections);

}  // namespace gazedec
