// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazedec/ingest.hpp"
#include "gazedec/rng.hpp"
#include "gazedec/targets.hpp"

namespace gazedec {

/// Explicit description of one moving rectangle. Objects listed later are
/// drawn in front; an object fully covered by a fronter box is invisible for
/// the duration of the overlap.
struct ObjectSpec {
  std::string class_label = "person";
  double w = 100.0, h = 100.0;
  double x0 = 0.0, y0 = 0.0;  // top-left at t=0
  double vx = 0.0, vy = 0.0;  // px/s
  bool bounce = true;         // false: track ends when the box leaves the frame
};

struct SceneConfig {
  double width = 1920.0, height = 1200.0;
  double fps = 30.0;
  double duration_s = 10.0;
  int object_count = 5;
  double min_size = 80.0, max_size = 260.0;
  double min_speed = 20.0, max_speed = 160.0;
  std::vector<std::string> class_pool = {"person", "car", "bicycle", "handbag",
                                         "motorcycle", "bus"};
  bool occlusion = true;
  /// When set, overrides the randomized object_count objects.
  std::optional<std::vector<ObjectSpec>> objects;

  void validate() const;
};

struct Scene {
  VideoMeta meta;
  std::vector<TrackedObject> tracks;
};

Scene generate_scene(const SceneConfig& cfg, const std::string& video_id,
                     RngStream& rng);

/// Behavioral gaze model: smooth pursuit of the assigned target's center with
/// a fixed lag, Gaussian jitter, blink-induced missing gaps, and a delayed
/// response after each target switch.
struct GazeModelConfig {
  double sample_rate_hz = 60.0;
  double pursuit_lag_ms = 150.0;
  double noise_px = 0.0;
  double blink_rate_hz = 0.0;
  double blink_min_ms = 100.0, blink_max_ms = 300.0;
  double switch_latency_ms = 250.0;

  void validate() const;
};

std::vector<GazeSample> simulate_gaze(std::span<const TrackedObject> tracks,
                                      std::span<const TargetAssignment> assignments,
                                      const GazeModelConfig& cfg,
                                      const VideoMeta& meta, RngStream& rng);

/// Imperfect-detector model applied to ground-truth tracks: per-frame box
/// jitter, dropped boxes, and spurious single-frame candidates.
struct DetectorSim {
  double box_noise_px = 0.0;
  double drop_prob = 0.0;
  double spurious_rate = 0.0;  // expected spurious boxes per frame

  bool active() const {
    return box_noise_px > 0.0 || drop_prob > 0.0 || spurious_rate > 0.0;
  }
};

std::vector<TrackedObject> simulate_detections(std::span<const TrackedObject> tracks,
                                               const DetectorSim& sim,
                                               const VideoMeta& meta,
                                               RngStream& rng);

/// Full generator specification: scenes x participants, written in the
/// ingest file formats.
struct SynthSpec {
  int videos = 1;
  int participants = 1;
  SceneConfig scene;
  GazeModelConfig gaze;
  SwitchTimeDist switches;
  DetectorSim detector;
};

/// Generate a complete dataset under out_dir and return its manifest (also
/// written to out_dir / "manifest.json"). Deterministic in (spec, seed).
Manifest generate_dataset(const SynthSpec& spec, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

}  // namespace gazedec
