// SPDX-License-Identifier: Apache-2.0
#include "gazedec/targets.hpp"

#include <algorithm>
#include <cmath>

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

int frame_of(double t, const VideoMeta& meta) {
  return static_cast<int>(std::floor(t * meta.fps));
}

const TrackedObject* find_track(std::span<const TrackedObject> tracks, int id) {
  for (const auto& t : tracks)
    if (t.object_id == id) return &t;
  return nullptr;
}

/// Last frame of the contiguous visibility run starting at `frame`,
/// or -1 if the object has no box there.
int run_end_frame(const TrackedObject& obj, int frame, int frame_count) {
  if (!obj.boxes.count(frame)) return -1;
  int last = frame;
  while (last + 1 < frame_count && obj.boxes.count(last + 1)) ++last;
  return last;
}

}  // namespace

void SwitchTimeDist::validate() const {
  if (minimum_s < 0.0 || mean_excess_s <= 0.0)
    throw ConfigError("switch-time distribution needs minimum >= 0 and mean_excess > 0");
}

double remaining_duration(std::span<const TrackedObject> tracks, int object_id,
                          double t, const VideoMeta& meta) {
  const TrackedObject* obj = find_track(tracks, object_id);
  if (!obj) throw DomainError("unknown object id " + std::to_string(object_id));
  const int f = frame_of(t, meta);
  const int last = run_end_frame(*obj, f, meta.frame_count);
  if (last < 0)
    throw DomainError("object " + std::to_string(object_id) +
                      " not visible at t=" + std::to_string(t));
  return (last + 1) / meta.fps - t;
}

int sample_target(std::span<const TrackedObject> tracks, double t,
                  const VideoMeta& meta, RngStream& rng) {
  const int f = frame_of(t, meta);
  std::vector<std::pair<int, double>> candidates;  // (id, remaining seconds)
  for (const auto& obj : tracks) {
    const int last = run_end_frame(obj, f, meta.frame_count);
    if (last >= 0) candidates.emplace_back(obj.object_id, (last + 1) / meta.fps - t);
  }
  if (candidates.empty())
    throw DomainError("no object visible at t=" + std::to_string(t));
  if (candidates.size() == 1) return candidates.front().first;

  double total = 0.0;
  for (const auto& [id, d] : candidates) total += d;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (const auto& [id, d] : candidates) {
    acc += d;
    if (u < acc) return id;
  }
  return candidates.back().first;
}

double sample_switch_time(const SwitchTimeDist& dist, RngStream& rng) {
  dist.validate();
  return dist.minimum_s + rng.exponential(dist.mean_excess_s);
}

TargetGenResult generate_target_list(std::span<const TrackedObject> tracks,
                                     const VideoMeta& meta,
                                     const SwitchTimeDist& dist, RngStream& rng) {
  dist.validate();
  const double total_s = meta.frame_count / meta.fps;
  TargetGenResult result;
  double t = 0.0;
  while (t < total_s) {
    int target;
    try {
      target = sample_target(tracks, t, meta, rng);
    } catch (const DomainError&) {
      result.full_coverage = false;
      break;
    }
    const TrackedObject& obj = *find_track(tracks, target);
    const int last = run_end_frame(obj, frame_of(t, meta), meta.frame_count);
    const double switch_dt = sample_switch_time(dist, rng);

    // When disappearance wins, snap the segment end onto the frame grid so
    // downstream frame->assignment lookups agree bit-for-bit.
    const double end_by_visibility = (last + 1) / meta.fps;
    double end = std::min(t + switch_dt, end_by_visibility);
    end = std::min(end, total_s);
    result.assignments.push_back({target, t, end});
    t = end;
  }
  result.covered_until_s = t;
  return result;
}

}  // namespace gazedec
