// SPDX-License-Identifier: Apache-2.0
#include "gazedec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"

namespace gazedec {

using detail::fmt_double;
using detail::parse_double;
using detail::parse_int;
using detail::split_csv;
using detail::strip_cr;

namespace {

constexpr const char* kGazeHeader = "timestamp_ms,x,y";
constexpr const char* kTrackHeader = "frame,id,left,top,w,h,conf,class";
constexpr const char* kAssignmentHeader = "object_id,start_time_s,end_time_s";

void expect_header(std::istream& in, const char* expected,
                   const std::string& source) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError::at(source, 1, "missing header row");
  if (strip_cr(line) != expected)
    throw FormatError::at(source, 1,
                          "expected header '" + std::string(expected) + "'");
}

double field_double(std::string_view s, const std::string& source,
                    std::size_t line, const char* what) {
  double v = 0.0;
  if (!parse_double(s, v) || !std::isfinite(v))
    throw FormatError::at(source, line,
                          std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

int field_int(std::string_view s, const std::string& source, std::size_t line,
              const char* what) {
  int v = 0;
  if (!parse_int(s, v))
    throw FormatError::at(source, line,
                          std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::vector<GazeSample> parse_gaze_stream(std::istream& in,
                                          const std::string& source) {
  expect_header(in, kGazeHeader, source);
  std::vector<GazeSample> samples;
  std::string raw;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3)
      throw FormatError::at(source, line_no, "expected 3 fields");
    GazeSample s;
    s.timestamp_ms = field_double(f[0], source, line_no, "timestamp");
    if (!samples.empty() && s.timestamp_ms <= samples.back().timestamp_ms)
      throw FormatError::at(source, line_no, "timestamps must increase strictly");
    const bool x_empty = f[1].empty();
    const bool y_empty = f[2].empty();
    if (x_empty != y_empty)
      throw FormatError::at(source, line_no, "x and y must both be set or both empty");
    if (!x_empty)
      s.point = Point{field_double(f[1], source, line_no, "x"),
                      field_double(f[2], source, line_no, "y")};
    samples.push_back(s);
  }
  return samples;
}

void write_gaze_stream(std::ostream& out, std::span<const GazeSample> samples) {
  out << kGazeHeader << '\n';
  for (const auto& s : samples) {
    out << fmt_double(s.timestamp_ms) << ',';
    if (s.point)
      out << fmt_double(s.point->x) << ',' << fmt_double(s.point->y);
    else
      out << ',';
    out << '\n';
  }
}

std::vector<TrackedObject> parse_tracks(std::istream& in,
                                        const std::string& source) {
  expect_header(in, kTrackHeader, source);
  std::unordered_map<int, TrackedObject> by_id;
  std::vector<int> id_order;
  std::string raw;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8)
      throw FormatError::at(source, line_no, "expected 8 fields");
    const int frame1 = field_int(f[0], source, line_no, "frame");
    if (frame1 < 1)
      throw FormatError::at(source, line_no, "frame indices are 1-based");
    const int id = field_int(f[1], source, line_no, "id");
    const double left = field_double(f[2], source, line_no, "left");
    const double top = field_double(f[3], source, line_no, "top");
    const double w = field_double(f[4], source, line_no, "w");
    const double h = field_double(f[5], source, line_no, "h");
    if (w < 0.0 || h < 0.0)
      throw FormatError::at(source, line_no, "negative box size");
    const double conf = field_double(f[6], source, line_no, "conf");
    if (conf < 0.0 || conf > 1.0)
      throw FormatError::at(source, line_no, "confidence outside [0, 1]");
    const std::string cls(f[7]);
    if (cls.empty())
      throw FormatError::at(source, line_no, "empty class label");

    auto [it, inserted] = by_id.try_emplace(id);
    TrackedObject& obj = it->second;
    if (inserted) {
      obj.object_id = id;
      obj.class_label = cls;
      obj.confidence = conf;
      id_order.push_back(id);
    } else {
      if (obj.class_label != cls)
        throw FormatError::at(source, line_no, "class label changed for id " +
                                                   std::to_string(id));
      if (std::abs(obj.confidence - conf) > 1e-9)
        throw FormatError::at(source, line_no, "confidence changed for id " +
                                                   std::to_string(id));
    }
    if (!obj.boxes.emplace(frame1 - 1, BBox::from_ltwh(left, top, w, h)).second)
      throw FormatError::at(source, line_no,
                            "duplicate (frame, id) row for id " + std::to_string(id));
  }
  std::vector<TrackedObject> tracks;
  tracks.reserve(id_order.size());
  for (int id : id_order) tracks.push_back(std::move(by_id.at(id)));
  return tracks;
}

void write_tracks(std::ostream& out, std::span<const TrackedObject> tracks) {
  out << kTrackHeader << '\n';
  // Frame-major order, matching the usual layout of tracking ground truth.
  std::vector<std::pair<int, const TrackedObject*>> rows;
  for (const auto& t : tracks)
    for (const auto& [frame, box] : t.boxes) rows.emplace_back(frame, &t);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->object_id < b.second->object_id;
  });
  for (const auto& [frame, t] : rows) {
    const BBox& b = t->boxes.at(frame);
    out << (frame + 1) << ',' << t->object_id << ',' << fmt_double(b.x_min)
        << ',' << fmt_double(b.y_min) << ',' << fmt_double(b.width()) << ','
        << fmt_double(b.height()) << ',' << fmt_double(t->confidence) << ','
        << t->class_label << '\n';
  }
}

std::vector<TargetAssignment> parse_assignments(std::istream& in,
                                                const std::string& source) {
  expect_header(in, kAssignmentHeader, source);
  std::vector<TargetAssignment> out;
  std::string raw;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3)
      throw FormatError::at(source, line_no, "expected 3 fields");
    TargetAssignment a;
    a.object_id = field_int(f[0], source, line_no, "object_id");
    a.start_time_s = field_double(f[1], source, line_no, "start_time_s");
    a.end_time_s = field_double(f[2], source, line_no, "end_time_s");
    if (a.start_time_s >= a.end_time_s)
      throw FormatError::at(source, line_no, "start_time_s must precede end_time_s");
    if (!out.empty() && a.start_time_s != out.back().end_time_s)
      throw FormatError::at(source, line_no,
                            "assignments must abut the previous interval");
    out.push_back(a);
  }
  return out;
}

void write_assignments(std::ostream& out,
                       std::span<const TargetAssignment> assignments) {
  out << kAssignmentHeader << '\n';
  for (const auto& a : assignments)
    out << a.object_id << ',' << fmt_double(a.start_time_s) << ','
        << fmt_double(a.end_time_s) << '\n';
}

std::vector<TrackedObject> filter_by_confidence(std::vector<TrackedObject> tracks,
                                                double min_confidence) {
  std::erase_if(tracks, [min_confidence](const TrackedObject& t) {
    return t.confidence < min_confidence;
  });
  return tracks;
}

std::vector<std::optional<Point>> align_gaze_to_frames(
    std::span<const GazeSample> samples, const VideoMeta& meta) {
  std::vector<std::optional<Point>> out(meta.frame_count);
  std::vector<Point> bucket;
  std::size_t i = 0;
  for (int f = 0; f < meta.frame_count; ++f) {
    const double end_ms = (f + 1) * 1000.0 / meta.fps;
    bucket.clear();
    while (i < samples.size() && samples[i].timestamp_ms < end_ms) {
      if (samples[i].point) bucket.push_back(*samples[i].point);
      ++i;
    }
    if (!bucket.empty()) {
      Point mean{0.0, 0.0};
      for (const Point& p : bucket) {
        mean.x += p.x;
        mean.y += p.y;
      }
      mean.x /= static_cast<double>(bucket.size());
      mean.y /= static_cast<double>(bucket.size());
      out[f] = mean;
    }
  }
  return out;
}

std::vector<FrameRecord> assemble_dataset(
    std::span<const TrackedObject> tracks,
    std::span<const TrackedObject> detections,
    std::span<const std::optional<Point>> frame_gaze,
    std::span<const TargetAssignment> assignments, const VideoMeta& meta) {
  if (static_cast<int>(frame_gaze.size()) != meta.frame_count)
    throw ConsistencyError("frame gaze length " + std::to_string(frame_gaze.size()) +
                           " does not match frame count " +
                           std::to_string(meta.frame_count));

  std::unordered_map<int, const TrackedObject*> track_by_id;
  for (const auto& t : tracks) {
    track_by_id[t.object_id] = &t;
    if (!t.boxes.empty() && t.boxes.rbegin()->first >= meta.frame_count)
      throw ConsistencyError("track " + std::to_string(t.object_id) +
                             " extends past frame count");
  }
  for (const auto& a : assignments)
    if (!track_by_id.count(a.object_id))
      throw ConsistencyError("assignment references unknown object id " +
                             std::to_string(a.object_id));

  std::vector<FrameRecord> records(meta.frame_count);
  std::size_t ai = 0;
  for (int f = 0; f < meta.frame_count; ++f) {
    FrameRecord& r = records[f];
    r.frame_index = f;
    r.gaze = frame_gaze[f];

    const double t = f / meta.fps;
    while (ai < assignments.size() && assignments[ai].end_time_s <= t) ++ai;
    if (ai < assignments.size() && assignments[ai].start_time_s <= t &&
        t < assignments[ai].end_time_s) {
      r.target_id = assignments[ai].object_id;
      const TrackedObject* obj = track_by_id.at(*r.target_id);
      if (auto it = obj->boxes.find(f); it != obj->boxes.end())
        r.target_box = it->second;
    }

    for (const auto& d : detections)
      if (auto it = d.boxes.find(f); it != d.boxes.end())
        r.detections.push_back({it->second, d.class_label, d.confidence});
  }
  return records;
}

// ---- Manifest ---------------------------------------------------------------

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConsistencyError("cannot open referenced file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const VideoEntry& Manifest::video(const std::string& video_id) const {
  for (const auto& v : videos)
    if (v.meta.video_id == video_id) return v;
  throw ConsistencyError("manifest has no video '" + video_id + "'");
}

Manifest load_manifest(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "gazedec-manifest")
      throw FormatError(file.string() + ": not a gazedec manifest");
    Manifest m;
    for (const auto& v : j.at("videos")) {
      VideoEntry e;
      e.meta.video_id = v.at("video_id");
      e.meta.fps = v.at("fps");
      e.meta.width = v.at("width");
      e.meta.height = v.at("height");
      e.meta.frame_count = v.at("frame_count");
      if (e.meta.fps <= 0.0 || e.meta.width <= 0.0 || e.meta.height <= 0.0 ||
          e.meta.frame_count <= 0)
        throw FormatError(file.string() + ": non-positive video dimensions for '" +
                          e.meta.video_id + "'");
      e.tracks_path = v.at("tracks");
      e.detections_path = v.value("detections", "");
      m.videos.push_back(std::move(e));
    }
    for (const auto& r : j.at("runs")) {
      RunEntry e;
      e.video_id = r.at("video_id");
      e.participant_id = r.at("participant_id");
      e.gaze_path = r.at("gaze");
      e.assignments_path = r.at("assignments");
      m.video(e.video_id);  // must exist
      m.runs.push_back(std::move(e));
    }
    if (j.contains("generator")) m.generator_echo = j.at("generator").dump();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

void save_manifest(const Manifest& m, const std::filesystem::path& file) {
  json j;
  j["format"] = "gazedec-manifest";
  j["version"] = 1;
  j["videos"] = json::array();
  for (const auto& v : m.videos) {
    json e{{"video_id", v.meta.video_id}, {"fps", v.meta.fps},
           {"width", v.meta.width},       {"height", v.meta.height},
           {"frame_count", v.meta.frame_count}, {"tracks", v.tracks_path}};
    if (!v.detections_path.empty()) e["detections"] = v.detections_path;
    j["videos"].push_back(std::move(e));
  }
  j["runs"] = json::array();
  for (const auto& r : m.runs)
    j["runs"].push_back({{"video_id", r.video_id},
                         {"participant_id", r.participant_id},
                         {"gaze", r.gaze_path},
                         {"assignments", r.assignments_path}});
  if (!m.generator_echo.empty()) j["generator"] = json::parse(m.generator_echo);

  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write manifest " + file.string());
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& manifest_file,
                     const LoadOptions& opts) {
  const Manifest m = load_manifest(manifest_file);
  const auto base = manifest_file.parent_path();

  struct VideoData {
    VideoMeta meta;
    std::vector<TrackedObject> tracks;
    std::vector<TrackedObject> detections;
  };
  std::unordered_map<std::string, VideoData> videos;
  for (const auto& v : m.videos) {
    VideoData d;
    d.meta = v.meta;
    {
      std::istringstream in(read_file(base / v.tracks_path));
      d.tracks = parse_tracks(in, v.tracks_path);
    }
    if (v.detections_path.empty()) {
      d.detections = d.tracks;
    } else {
      std::istringstream in(read_file(base / v.detections_path));
      d.detections = parse_tracks(in, v.detections_path);
    }
    if (opts.min_detection_confidence > 0.0)
      d.detections =
          filter_by_confidence(std::move(d.detections), opts.min_detection_confidence);
    videos.emplace(v.meta.video_id, std::move(d));
  }

  Dataset ds;
  for (const auto& r : m.runs) {
    const VideoData& vd = videos.at(r.video_id);
    Run run;
    run.meta = vd.meta;
    run.participant_id = r.participant_id;
    {
      std::istringstream in(read_file(base / r.assignments_path));
      run.assignments = parse_assignments(in, r.assignments_path);
    }
    std::vector<GazeSample> samples;
    {
      std::istringstream in(read_file(base / r.gaze_path));
      samples = parse_gaze_stream(in, r.gaze_path);
    }
    const auto frame_gaze = align_gaze_to_frames(samples, vd.meta);
    run.records = assemble_dataset(vd.tracks, vd.detections, frame_gaze,
                                   run.assignments, vd.meta);
    ds.runs.push_back(std::move(run));
  }
  return ds;
}

}  // namespace gazedec
