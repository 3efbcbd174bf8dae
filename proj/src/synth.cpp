// SPDX-License-Identifier: Apache-2.0
#include "gazedec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

/// Reflect x into [0, limit] (triangle wave), for wall bounces.
double fold(double x, double limit) {
  if (limit <= 0.0) return 0.0;
  const double period = 2.0 * limit;
  double m = std::fmod(x, period);
  if (m < 0.0) m += period;
  return m <= limit ? m : period - m;
}

int poisson(double lambda, RngStream& rng) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform01();
  } while (p > limit);
  return k - 1;
}

std::string zero_pad(int n) {
  return (n < 10 ? "0" : "") + std::to_string(n);
}

}  // namespace

void SceneConfig::validate() const {
  if (width <= 0.0 || height <= 0.0 || fps <= 0.0 || duration_s <= 0.0)
    throw ConfigError("scene dimensions, fps and duration must be positive");
  if (!objects && object_count < 1)
    throw ConfigError("scene needs at least one object");
  if (!objects && (min_size <= 0.0 || max_size < min_size || min_speed < 0.0 ||
                   max_speed < min_speed || class_pool.empty()))
    throw ConfigError("invalid scene object ranges");
}

void GazeModelConfig::validate() const {
  if (sample_rate_hz <= 0.0)
    throw ConfigError("gaze sample rate must be positive");
  if (pursuit_lag_ms < 0.0 || noise_px < 0.0 || blink_rate_hz < 0.0 ||
      blink_min_ms < 0.0 || blink_max_ms < blink_min_ms || switch_latency_ms < 0.0)
    throw ConfigError("gaze model parameters must be non-negative");
}

Scene generate_scene(const SceneConfig& cfg, const std::string& video_id,
                     RngStream& rng) {
  cfg.validate();
  Scene scene;
  scene.meta = {video_id, cfg.fps, cfg.width, cfg.height,
                static_cast<int>(std::lround(cfg.duration_s * cfg.fps))};

  std::vector<ObjectSpec> objects;
  if (cfg.objects) {
    objects = *cfg.objects;
  } else {
    for (int i = 0; i < cfg.object_count; ++i) {
      ObjectSpec o;
      o.class_label = cfg.class_pool[i % cfg.class_pool.size()];
      o.w = rng.uniform(cfg.min_size, cfg.max_size);
      o.h = rng.uniform(cfg.min_size, cfg.max_size);
      o.x0 = rng.uniform(0.0, std::max(1.0, cfg.width - o.w));
      o.y0 = rng.uniform(0.0, std::max(1.0, cfg.height - o.h));
      const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      o.vx = speed * std::cos(angle);
      o.vy = speed * std::sin(angle);
      objects.push_back(o);
    }
  }

  scene.tracks.resize(objects.size());
  std::vector<std::optional<BBox>> frame_boxes(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    scene.tracks[i].object_id = static_cast<int>(i + 1);
    scene.tracks[i].class_label = objects[i].class_label;
    scene.tracks[i].confidence = 1.0;
  }

  for (int f = 0; f < scene.meta.frame_count; ++f) {
    const double t = f / cfg.fps;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const ObjectSpec& o = objects[i];
      double x = o.x0 + o.vx * t;
      double y = o.y0 + o.vy * t;
      if (o.bounce) {
        x = fold(x, std::max(0.0, cfg.width - o.w));
        y = fold(y, std::max(0.0, cfg.height - o.h));
      }
      const BBox box{x, y, x + o.w, y + o.h};
      const bool on_screen = box.x_max > 0.0 && box.x_min < cfg.width &&
                             box.y_max > 0.0 && box.y_min < cfg.height;
      frame_boxes[i] = on_screen ? std::optional<BBox>(box) : std::nullopt;
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (!frame_boxes[i]) continue;
      bool occluded = false;
      if (cfg.occlusion) {
        for (std::size_t j = i + 1; j < objects.size() && !occluded; ++j) {
          if (!frame_boxes[j]) continue;
          const BBox& a = *frame_boxes[i];
          const BBox& b = *frame_boxes[j];
          occluded = b.x_min <= a.x_min && b.y_min <= a.y_min &&
                     b.x_max >= a.x_max && b.y_max >= a.y_max;
        }
      }
      if (!occluded) scene.tracks[i].boxes.emplace(f, *frame_boxes[i]);
    }
  }

  // Objects that never made it on screen would violate track invariants.
  std::erase_if(scene.tracks,
                [](const TrackedObject& t) { return t.boxes.empty(); });
  return scene;
}

std::vector<GazeSample> simulate_gaze(std::span<const TrackedObject> tracks,
                                      std::span<const TargetAssignment> assignments,
                                      const GazeModelConfig& cfg,
                                      const VideoMeta& meta, RngStream& rng) {
  cfg.validate();
  std::unordered_map<int, const TrackedObject*> by_id;
  for (const auto& t : tracks) by_id[t.object_id] = &t;
  for (const auto& a : assignments)
    if (!by_id.count(a.object_id))
      throw ConsistencyError("gaze simulation: unknown target id " +
                             std::to_string(a.object_id));

  const double total_s = meta.frame_count / meta.fps;
  const double dt = 1.0 / cfg.sample_rate_hz;
  const double lag_s = cfg.pursuit_lag_ms / 1000.0;
  const double latency_s = cfg.switch_latency_ms / 1000.0;

  // Pre-draw blink intervals over the whole run.
  std::vector<std::pair<double, double>> blinks;
  if (cfg.blink_rate_hz > 0.0) {
    double t = rng.exponential(1.0 / cfg.blink_rate_hz);
    while (t < total_s) {
      const double dur = rng.uniform(cfg.blink_min_ms, cfg.blink_max_ms) / 1000.0;
      blinks.emplace_back(t, t + dur);
      t = t + dur + rng.exponential(1.0 / cfg.blink_rate_hz);
    }
  }

  auto center_at = [&](int object_id, double query_t) -> std::optional<Point> {
    const TrackedObject* obj = by_id.at(object_id);
    const int f = std::clamp(static_cast<int>(std::floor(query_t * meta.fps)), 0,
                             meta.frame_count - 1);
    if (auto it = obj->boxes.find(f); it != obj->boxes.end())
      return it->second.center();
    return std::nullopt;
  };

  std::vector<GazeSample> samples;
  Point last{meta.width / 2.0, meta.height / 2.0};
  std::size_t ai = 0;
  std::size_t bi = 0;
  for (int k = 0; k * dt < total_s; ++k) {
    const double t = k * dt;
    GazeSample s;
    s.timestamp_ms = t * 1000.0;

    while (bi < blinks.size() && blinks[bi].second <= t) ++bi;
    const bool blinking = bi < blinks.size() && blinks[bi].first <= t;

    while (ai < assignments.size() && assignments[ai].end_time_s <= t) ++ai;
    if (!blinking && ai < assignments.size() && assignments[ai].start_time_s <= t) {
      // During the post-switch latency the eye still pursues the previous
      // target (when there is one).
      std::size_t effective = ai;
      if (ai > 0 && t < assignments[ai].start_time_s + latency_s) effective = ai - 1;
      const double query_t = std::max(0.0, t - lag_s);
      std::optional<Point> c = center_at(assignments[effective].object_id, query_t);
      if (!c) c = center_at(assignments[effective].object_id, t);
      if (c) last = *c;
      s.point = Point{last.x + (cfg.noise_px > 0.0 ? rng.normal(0.0, cfg.noise_px) : 0.0),
                      last.y + (cfg.noise_px > 0.0 ? rng.normal(0.0, cfg.noise_px) : 0.0)};
    } else if (!blinking) {
      s.point = last;  // no assignment yet/anymore: hold position
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<TrackedObject> simulate_detections(std::span<const TrackedObject> tracks,
                                               const DetectorSim& sim,
                                               const VideoMeta& meta,
                                               RngStream& rng) {
  std::vector<TrackedObject> out;
  int next_id = 0;
  for (const auto& t : tracks) next_id = std::max(next_id, t.object_id);

  for (const auto& t : tracks) {
    TrackedObject d;
    d.object_id = t.object_id;
    d.class_label = t.class_label;
    d.confidence = rng.uniform(0.5, 1.0);
    for (const auto& [f, box] : t.boxes) {
      if (sim.drop_prob > 0.0 && rng.uniform01() < sim.drop_prob) continue;
      BBox b = box;
      if (sim.box_noise_px > 0.0) {
        const double nx1 = rng.normal(0.0, sim.box_noise_px);
        const double ny1 = rng.normal(0.0, sim.box_noise_px);
        const double nx2 = rng.normal(0.0, sim.box_noise_px);
        const double ny2 = rng.normal(0.0, sim.box_noise_px);
        b = BBox{std::min(box.x_min + nx1, box.x_max + nx2),
                 std::min(box.y_min + ny1, box.y_max + ny2),
                 std::max(box.x_min + nx1, box.x_max + nx2),
                 std::max(box.y_min + ny1, box.y_max + ny2)};
      }
      d.boxes.emplace(f, b);
    }
    if (!d.boxes.empty()) out.push_back(std::move(d));
  }

  if (sim.spurious_rate > 0.0 && !tracks.empty()) {
    for (int f = 0; f < meta.frame_count; ++f) {
      const int n = poisson(sim.spurious_rate, rng);
      for (int k = 0; k < n; ++k) {
        const TrackedObject& donor = tracks[rng.uniform_index(tracks.size())];
        const BBox* donor_box = donor.boxes.empty()
                                    ? nullptr
                                    : &donor.boxes.begin()->second;
        const double w = donor_box ? donor_box->width() : 100.0;
        const double h = donor_box ? donor_box->height() : 100.0;
        const double x = rng.uniform(0.0, std::max(1.0, meta.width - w));
        const double y = rng.uniform(0.0, std::max(1.0, meta.height - h));
        TrackedObject sp;
        sp.object_id = ++next_id;
        sp.class_label = donor.class_label;
        sp.confidence = rng.uniform(0.1, 0.6);
        sp.boxes.emplace(f, BBox{x, y, x + w, y + h});
        out.push_back(std::move(sp));
      }
    }
  }
  return out;
}

Manifest generate_dataset(const SynthSpec& spec, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
  if (spec.videos < 1 || spec.participants < 1)
    throw ConfigError("synth needs at least one video and one participant");
  spec.scene.validate();
  spec.gaze.validate();
  spec.switches.validate();

  std::filesystem::create_directories(out_dir);
  RngStream root(seed);
  Manifest manifest;

  auto write_file = [](const std::filesystem::path& p, auto&& writer) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConsistencyError("cannot write " + p.string());
    writer(out);
  };

  for (int v = 0; v < spec.videos; ++v) {
    const std::string vid = "video" + zero_pad(v + 1);
    std::filesystem::create_directories(out_dir / vid);
    RngStream scene_rng = root.substream("scene/" + vid);
    Scene scene = generate_scene(spec.scene, vid, scene_rng);

    VideoEntry entry;
    entry.meta = scene.meta;
    entry.tracks_path = vid + "/tracks.csv";
    write_file(out_dir / entry.tracks_path,
               [&](std::ostream& o) { write_tracks(o, scene.tracks); });

    std::vector<TrackedObject> detections = scene.tracks;
    if (spec.detector.active()) {
      RngStream det_rng = root.substream("detector/" + vid);
      detections = simulate_detections(scene.tracks, spec.detector, scene.meta, det_rng);
      entry.detections_path = vid + "/detections.csv";
      write_file(out_dir / entry.detections_path,
                 [&](std::ostream& o) { write_tracks(o, detections); });
    }
    manifest.videos.push_back(entry);

    for (int p = 0; p < spec.participants; ++p) {
      const std::string pid = "p" + zero_pad(p + 1);
      std::filesystem::create_directories(out_dir / vid / pid);
      RngStream target_rng = root.substream("targets/" + vid + "/" + pid);
      const TargetGenResult targets =
          generate_target_list(scene.tracks, scene.meta, spec.switches, target_rng);
      RngStream gaze_rng = root.substream("gaze/" + vid + "/" + pid);
      const auto samples = simulate_gaze(scene.tracks, targets.assignments,
                                         spec.gaze, scene.meta, gaze_rng);

      RunEntry run;
      run.video_id = vid;
      run.participant_id = pid;
      run.gaze_path = vid + "/" + pid + "/gaze.csv";
      run.assignments_path = vid + "/" + pid + "/assignments.csv";
      write_file(out_dir / run.gaze_path,
                 [&](std::ostream& o) { write_gaze_stream(o, samples); });
      write_file(out_dir / run.assignments_path,
                 [&](std::ostream& o) { write_assignments(o, targets.assignments); });
      manifest.runs.push_back(run);
    }
  }

  nlohmann::json echo{
      {"seed", seed},
      {"videos", spec.videos},
      {"participants", spec.participants},
      {"scene",
       {{"width", spec.scene.width},
        {"height", spec.scene.height},
        {"fps", spec.scene.fps},
        {"duration_s", spec.scene.duration_s},
        {"object_count", spec.scene.object_count},
        {"occlusion", spec.scene.occlusion}}},
      {"gaze",
       {{"sample_rate_hz", spec.gaze.sample_rate_hz},
        {"pursuit_lag_ms", spec.gaze.pursuit_lag_ms},
        {"noise_px", spec.gaze.noise_px},
        {"blink_rate_hz", spec.gaze.blink_rate_hz},
        {"switch_latency_ms", spec.gaze.switch_latency_ms}}},
      {"switches",
       {{"minimum_s", spec.switches.minimum_s},
        {"mean_excess_s", spec.switches.mean_excess_s}}},
      {"detector",
       {{"box_noise_px", spec.detector.box_noise_px},
        {"drop_prob", spec.detector.drop_prob},
        {"spurious_rate", spec.detector.spurious_rate}}}};
  manifest.generator_echo = echo.dump();

  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace gazedec
