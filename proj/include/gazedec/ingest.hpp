// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazedec/geometry.hpp"

namespace gazedec {

/// One raw eye-tracker sample. Missing gaze (blinks, tracking loss) is an
/// absent point, never a sentinel coordinate.
struct GazeSample {
  double timestamp_ms = 0.0;
  std::optional<Point> point;
};

struct Detection {
  BBox box;
  std::string class_label;
  double confidence = 1.0;
};

/// One tracked object: per-frame boxes keyed by 0-based frame index.
struct TrackedObject {
  int object_id = 0;
  std::string class_label;
  double confidence = 1.0;
  std::map<int, BBox> boxes;
};

struct VideoMeta {
  std::string video_id;
  double fps = 30.0;
  double width = 0.0;
  double height = 0.0;
  int frame_count = 0;
};

/// Interval during which one object is the assigned viewing target.
/// Consecutive assignments abut; times are seconds from video start.
struct TargetAssignment {
  int object_id = 0;
  double start_time_s = 0.0;
  double end_time_s = 0.0;
};

/// Everything known about one video frame for one participant.
struct FrameRecord {
  int frame_index = 0;
  std::optional<Point> gaze;
  std::optional<int> target_id;
  std::optional<BBox> target_box;
  std::vector<Detection> detections;
};

// ---- Text formats ---------------------------------------------------------
// All three CSV formats carry a header row, UTF-8, LF line endings. Numbers
// are written with shortest round-trip formatting, so parse(serialize(x))
// reproduces x exactly.

/// Gaze CSV `timestamp_ms,x,y`; empty x and y encode a missing sample.
/// Throws FormatError (with source:line) on malformed rows or timestamps
/// that fail to increase strictly.
std::vector<GazeSample> parse_gaze_stream(std::istream& in,
                                          const std::string& source = "<gaze>");
void write_gaze_stream(std::ostream& out, std::span<const GazeSample> samples);

/// Track CSV `frame,id,left,top,w,h,conf,class` with 1-based frame indices
/// (converted to 0-based corner-form boxes here at the boundary).
std::vector<TrackedObject> parse_tracks(std::istream& in,
                                        const std::string& source = "<tracks>");
void write_tracks(std::ostream& out, std::span<const TrackedObject> tracks);

/// Assignment CSV `object_id,start_time_s,end_time_s`.
std::vector<TargetAssignment> parse_assignments(
    std::istream& in, const std::string& source = "<assignments>");
void write_assignments(std::ostream& out,
                       std::span<const TargetAssignment> assignments);

/// Drop objects whose confidence falls below the threshold.
std::vector<TrackedObject> filter_by_confidence(std::vector<TrackedObject> tracks,
                                                double min_confidence);

// ---- Alignment & assembly -------------------------------------------------

/// Map 60 Hz (or any rate) samples onto frames: frame f receives the mean of
/// all valid sample points with timestamp in [f/fps, (f+1)/fps); missing when
/// the interval holds no valid sample.
std::vector<std::optional<Point>> align_gaze_to_frames(
    std::span<const GazeSample> samples, const VideoMeta& meta);

/// Build one FrameRecord per frame. `detections` may alias `tracks` when no
/// separate detector output exists. Throws ConsistencyError if an assignment
/// references an unknown object id or a track leaves the video bounds.
std::vector<FrameRecord> assemble_dataset(
    std::span<const TrackedObject> tracks,
    std::span<const TrackedObject> detections,
    std::span<const std::optional<Point>> frame_gaze,
    std::span<const TargetAssignment> assignments, const VideoMeta& meta);

// ---- Manifest --------------------------------------------------------------

struct VideoEntry {
  VideoMeta meta;
  std::string tracks_path;
  std::string detections_path;  // empty: reuse tracks as detections
};

struct RunEntry {
  std::string video_id;
  std::string participant_id;
  std::string gaze_path;
  std::string assignments_path;
};

/// Dataset manifest: videos, per-(video, participant) runs, and an optional
/// echo of the generator configuration. Paths are relative to the manifest.
struct Manifest {
  std::vector<VideoEntry> videos;
  std::vector<RunEntry> runs;
  std::string generator_echo;  // JSON text, empty if absent

  const VideoEntry& video(const std::string& video_id) const;
};

Manifest load_manifest(const std::filesystem::path& file);
void save_manifest(const Manifest& m, const std::filesystem::path& file);

/// One loaded (video, participant) run.
struct Run {
  VideoMeta meta;
  std::string participant_id;
  std::vector<TargetAssignment> assignments;
  std::vector<FrameRecord> records;
};

struct Dataset {
  std::vector<Run> runs;
};

struct LoadOptions {
  double min_detection_confidence = 0.0;
};

/// Load every run referenced by a manifest; verifies referenced files exist.
Dataset load_dataset(const std::filesystem::path& manifest_file,
                     const LoadOptions& opts = {});

}  // namespace gazedec
