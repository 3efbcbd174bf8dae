// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gazedec/ingest.hpp"

namespace gazedec {

struct CleaningConfig {
  double transition_latency_ms = 300.0;
  int max_impute_gap_frames = 10;
  double overt_threshold_px = 100.0;

  void validate() const;
};

/// Frame counts surviving each stage of the pipeline, one row per run.
struct CleaningRow {
  std::string video_id;
  std::string participant_id;
  std::size_t total = 0;             // raw frames
  std::size_t after_transition = 0;  // minus post-switch latency windows
  std::size_t after_gaze = 0;        // minus unimputable / untrackable frames
  std::size_t after_overt = 0;       // minus far-from-target frames
  std::size_t distinct_targets = 0;
  std::size_t transitions = 0;
};

struct CleaningReport {
  std::vector<CleaningRow> rows;

  CleaningRow totals() const;
  void write_csv(std::ostream& out) const;
  void write_table(std::ostream& out) const;
};

// Individual stages, in pipeline order. Each returns the retained records;
// frame indices keep their original values so frame->time mapping survives.

/// Stage 1: drop every frame whose start time lies within
/// [switch, switch + latency) for any assignment start.
std::vector<FrameRecord> drop_transition_frames(
    std::vector<FrameRecord> records, std::span<const TargetAssignment> assignments,
    const CleaningConfig& cfg, double fps);

/// Stage 2a: fill missing-gaze runs shorter than max_impute_gap_frames that
/// are bounded by valid frames on both sides, interpolating linearly against
/// frame index. Longer or boundary-touching runs stay missing.
std::vector<FrameRecord> impute_gaze(std::vector<FrameRecord> records,
                                     const CleaningConfig& cfg);

/// Stage 2b: drop frames that still miss gaze, carry no detections, or lack
/// a usable target label.
std::vector<FrameRecord> drop_untrackable(std::vector<FrameRecord> records);

/// Stage 3: keep frames whose gaze lies within overt_threshold_px (inclusive)
/// of the target box. Throws ConsistencyError on a record without target_box.
std::vector<FrameRecord> overt_filter(std::vector<FrameRecord> records,
                                      const CleaningConfig& cfg);

/// Full pipeline 1 -> 2 -> 3 over one run, counting survivors per stage.
CleaningRow clean_run(Run& run, const CleaningConfig& cfg);

/// Clean every run of a dataset in place.
CleaningReport clean_dataset(Dataset& ds, const CleaningConfig& cfg);

}  // namespace gazedec
