// SPDX-License-Identifier: Apache-2.0
#include "gazedec/cleaning.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"
#include "gazedec/geometry.hpp"

namespace gazedec {

void CleaningConfig::validate() const {
  if (transition_latency_ms <= 0.0 || max_impute_gap_frames <= 0 ||
      overt_threshold_px <= 0.0)
    throw ConfigError("cleaning parameters must be strictly positive");
}

std::vector<FrameRecord> drop_transition_frames(
    std::vector<FrameRecord> records, std::span<const TargetAssignment> assignments,
    const CleaningConfig& cfg, double fps) {
  const double latency_s = cfg.transition_latency_ms / 1000.0;
  std::vector<double> switches;
  switches.reserve(assignments.size());
  for (const auto& a : assignments) switches.push_back(a.start_time_s);

  std::erase_if(records, [&](const FrameRecord& r) {
    const double t = r.frame_index / fps;
    // switches are sorted; find the last switch at or before t
    auto it = std::upper_bound(switches.begin(), switches.end(), t);
    return it != switches.begin() && t < *(it - 1) + latency_s;
  });
  return records;
}

std::vector<FrameRecord> impute_gaze(std::vector<FrameRecord> records,
                                     const CleaningConfig& cfg) {
  std::size_t i = 0;
  while (i < records.size()) {
    if (records[i].gaze) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < records.size() && !records[j].gaze) ++j;
    const std::size_t gap = j - i;
    const bool bounded = i > 0 && j < records.size();
    if (bounded && gap < static_cast<std::size_t>(cfg.max_impute_gap_frames)) {
      const FrameRecord& left = records[i - 1];
      const FrameRecord& right = records[j];
      const double span = right.frame_index - left.frame_index;
      for (std::size_t k = i; k < j; ++k) {
        const double w = (records[k].frame_index - left.frame_index) / span;
        records[k].gaze = Point{left.gaze->x + w * (right.gaze->x - left.gaze->x),
                                left.gaze->y + w * (right.gaze->y - left.gaze->y)};
      }
    }
    i = j;
  }
  return records;
}

std::vector<FrameRecord> drop_untrackable(std::vector<FrameRecord> records) {
  std::erase_if(records, [](const FrameRecord& r) {
    return !r.gaze || r.detections.empty() || !r.target_box;
  });
  return records;
}

std::vector<FrameRecord> overt_filter(std::vector<FrameRecord> records,
                                      const CleaningConfig& cfg) {
  for (const auto& r : records) {
    if (!r.target_box)
      throw ConsistencyError("frame " + std::to_string(r.frame_index) +
                             " reached the overt filter without a target box");
    if (!r.gaze)
      throw ConsistencyError("frame " + std::to_string(r.frame_index) +
                             " reached the overt filter without gaze");
  }
  std::erase_if(records, [&](const FrameRecord& r) {
    return distance_to_box(*r.gaze, *r.target_box) > cfg.overt_threshold_px;
  });
  return records;
}

CleaningRow clean_run(Run& run, const CleaningConfig& cfg) {
  cfg.validate();
  CleaningRow row;
  row.video_id = run.meta.video_id;
  row.participant_id = run.participant_id;
  row.total = run.records.size();

  run.records = drop_transition_frames(std::move(run.records), run.assignments,
                                       cfg, run.meta.fps);
  row.after_transition = run.records.size();

  run.records = drop_untrackable(impute_gaze(std::move(run.records), cfg));
  row.after_gaze = run.records.size();

  run.records = overt_filter(std::move(run.records), cfg);
  row.after_overt = run.records.size();

  std::set<int> targets;
  for (const auto& a : run.assignments) targets.insert(a.object_id);
  row.distinct_targets = targets.size();
  row.transitions = run.assignments.empty() ? 0 : run.assignments.size() - 1;
  return row;
}

CleaningReport clean_dataset(Dataset& ds, const CleaningConfig& cfg) {
  CleaningReport report;
  for (auto& run : ds.runs) report.rows.push_back(clean_run(run, cfg));
  return report;
}

CleaningRow CleaningReport::totals() const {
  CleaningRow t;
  t.video_id = "all";
  t.participant_id = "all";
  for (const auto& r : rows) {
    t.total += r.total;
    t.after_transition += r.after_transition;
    t.after_gaze += r.after_gaze;
    t.after_overt += r.after_overt;
    t.distinct_targets += r.distinct_targets;
    t.transitions += r.transitions;
  }
  return t;
}

void CleaningReport::write_csv(std::ostream& out) const {
  out << "video,participant,total,after_transition,after_gaze,after_overt,"
         "distinct_targets,transitions\n";
  auto emit = [&out](const CleaningRow& r) {
    out << r.video_id << ',' << r.participant_id << ',' << r.total << ','
        << r.after_transition << ',' << r.after_gaze << ',' << r.after_overt
        << ',' << r.distinct_targets << ',' << r.transitions << '\n';
  };
  for (const auto& r : rows) emit(r);
  emit(totals());
}

void CleaningReport::write_table(std::ostream& out) const {
  const CleaningRow t = totals();
  std::set<std::string> videos, participants;
  for (const auto& r : rows) {
    videos.insert(r.video_id);
    participants.insert(r.participant_id);
  }
  const double nv = videos.empty() ? 1.0 : static_cast<double>(videos.size());
  const double np = participants.empty() ? 1.0 : static_cast<double>(participants.size());
  out << "Feature                                       Total   Mean (/video)   Mean (/participant)\n";
  auto line = [&](const char* name, std::size_t v) {
    out << std::left << std::setw(42) << name << std::right << std::setw(9) << v
        << std::setw(16) << std::fixed << std::setprecision(1)
        << static_cast<double>(v) / nv << std::setw(22)
        << static_cast<double>(v) / np << '\n';
  };
  line("Total frames", t.total);
  line("Non-transition frames", t.after_transition);
  line("Non-transition frames w/ gaze", t.after_gaze);
  line("Non-transition frames w/ gaze near target", t.after_overt);
  line("Distinct target objects", t.distinct_targets);
  line("Transitions between target objects", t.transitions);
}

}  // namespace gazedec
