// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gazedec/ingest.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

/// Shifted-exponential switch-time distribution: minimum + Exp(mean_excess).
struct SwitchTimeDist {
  double minimum_s = 1.0;
  double mean_excess_s = 1.5;

  void validate() const;
};

/// Seconds the object stays contiguously visible from time t onward.
/// Throws DomainError when the object has no box at the frame containing t.
double remaining_duration(std::span<const TrackedObject> tracks, int object_id,
                          double t, const VideoMeta& meta);

/// Draw an object id among those visible at t, with probability proportional
/// to its remaining contiguous duration. With a single candidate the draw is
/// skipped and no random number is consumed. Throws DomainError when no
/// object is visible.
int sample_target(std::span<const TrackedObject> tracks, double t,
                  const VideoMeta& meta, RngStream& rng);

double sample_switch_time(const SwitchTimeDist& dist, RngStream& rng);

struct TargetGenResult {
  std::vector<TargetAssignment> assignments;
  bool full_coverage = true;     // false: generation stopped early
  double covered_until_s = 0.0;  // end of the last emitted assignment
};

/// Walk the video start to end, repeatedly drawing a target (duration-
/// weighted among visible objects) and holding it until it disappears or a
/// drawn switch time elapses, whichever comes first. If some mid-video time
/// has no visible object, generation stops there and full_coverage is false.
TargetGenResult generate_target_list(std::span<const TrackedObject> tracks,
                                     const VideoMeta& meta,
                                     const SwitchTimeDist& dist, RngStream& rng);

}  // namespace gazedec
