// SPDX-License-Identifier: Apache-2.0
#include "gazedec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"

namespace gazedec {

using detail::fmt_double;

void SplitSpec::validate() const {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ConfigError("split train_fraction must lie in (0, 1)");
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Fisher-Yates with our seeded stream, then take the first n as train keys.
std::set<std::string> pick_train_keys(std::vector<std::string> keys,
                                      double fraction, std::uint64_t seed,
                                      const char* what) {
  if (keys.size() < 2)
    throw ConfigError(std::string("cannot split: need at least two ") + what);
  RngStream rng = RngStream(seed).substream("split");
  for (std::size_t i = keys.size() - 1; i > 0; --i)
    std::swap(keys[i], keys[rng.uniform_index(i + 1)]);
  auto n = static_cast<std::size_t>(std::lround(fraction * keys.size()));
  n = std::clamp<std::size_t>(n, 1, keys.size() - 1);
  return {keys.begin(), keys.begin() + n};
}

}  // namespace

SplitResult split_dataset(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  SplitResult out;

  if (spec.mode == SplitMode::WITHIN_RUN) {
    for (const auto& run : ds.runs) {
      if (run.records.size() < 2)
        throw ConfigError("cannot split a run with fewer than two frames");
      auto n = static_cast<std::size_t>(
          std::floor(spec.train_fraction * run.records.size()));
      n = std::clamp<std::size_t>(n, 1, run.records.size() - 1);
      Run head = run, tail = run;
      head.records.assign(run.records.begin(), run.records.begin() + n);
      tail.records.assign(run.records.begin() + n, run.records.end());
      out.train.runs.push_back(std::move(head));
      out.test.runs.push_back(std::move(tail));
    }
    return out;
  }

  std::set<std::string> train_keys;
  const bool by_participant = spec.mode == SplitMode::BY_PARTICIPANT;
  std::vector<std::string> keys;
  for (const auto& run : ds.runs)
    keys.push_back(by_participant ? run.participant_id : run.meta.video_id);
  keys = sorted_unique(std::move(keys));

  if (spec.mode == SplitMode::BY_VIDEO && spec.pair_videos) {
    if (keys.size() < 2 || keys.size() % 2 != 0)
      throw ConfigError("pairing needs an even number of videos");
    for (std::size_t i = 1; i < keys.size(); i += 2) train_keys.insert(keys[i]);
  } else {
    train_keys = pick_train_keys(std::move(keys), spec.train_fraction, spec.seed,
                                 by_participant ? "participants" : "videos");
  }

  for (const auto& run : ds.runs) {
    const std::string& key = by_participant ? run.participant_id : run.meta.video_id;
    (train_keys.count(key) ? out.train : out.test).runs.push_back(run);
  }
  return out;
}

// ---- Predictions --------------------------------------------------------------

void write_predictions(std::ostream& out, const RunPredictions& preds) {
  out << "frame,decoder,x_min,y_min,x_max,y_max\n";
  for (const auto& [decoder, frames] : preds.by_decoder)
    for (const auto& [frame, box] : frames)
      out << frame << ',' << decoder << ',' << fmt_double(box.x_min) << ','
          << fmt_double(box.y_min) << ',' << fmt_double(box.x_max) << ','
          << fmt_double(box.y_max) << '\n';
}

RunPredictions parse_predictions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) ||
      detail::strip_cr(line) != "frame,decoder,x_min,y_min,x_max,y_max")
    throw FormatError::at(source, 1, "bad prediction header");
  RunPredictions out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::strip_cr(line);
    if (trimmed.empty()) continue;
    const auto f = detail::split_csv(trimmed);
    if (f.size() != 6) throw FormatError::at(source, line_no, "expected 6 fields");
    int frame = 0;
    BBox b;
    if (!detail::parse_int(f[0], frame) || !detail::parse_double(f[2], b.x_min) ||
        !detail::parse_double(f[3], b.y_min) || !detail::parse_double(f[4], b.x_max) ||
        !detail::parse_double(f[5], b.y_max))
      throw FormatError::at(source, line_no, "bad numeric field");
    if (!b.valid()) throw FormatError::at(source, line_no, "invalid box");
    out.by_decoder[std::string(f[1])][frame] = b;
  }
  return out;
}

RunPredictions decode_run(const Run& run, std::span<const std::string> decoders,
                          const FixedBoxPrior* prior, RngStream& rng) {
  RunPredictions out;
  out.video_id = run.meta.video_id;
  out.participant_id = run.participant_id;
  for (const auto& name : decoders) {
    auto& frames = out.by_decoder[name];
    for (const auto& rec : run.records) {
      if (name == "fixed_box") {
        if (!rec.gaze) continue;
        if (!prior) throw ConfigError("fixed_box decoder needs a fitted prior");
        frames[rec.frame_index] = decode_fixed_box(*rec.gaze, *prior, run.meta);
      } else if (name == "od_baseline") {
        if (!rec.gaze || rec.detections.empty()) continue;
        frames[rec.frame_index] = decode_od_baseline(*rec.gaze, rec.detections, rng);
      } else if (name == "od_mod") {
        if (!rec.gaze || rec.detections.empty()) continue;
        frames[rec.frame_index] = decode_od_mod(*rec.gaze, rec.detections);
      } else if (name == "od_oracle") {
        if (!rec.target_box || rec.detections.empty()) continue;
        frames[rec.frame_index] = decode_od_oracle(*rec.target_box, rec.detections);
      } else {
        throw ConfigError("unknown decoder '" + name + "'");
      }
    }
  }
  return out;
}

// ---- Evaluation ----------------------------------------------------------------

EvalResult evaluate(const Dataset& ds, std::span<const RunPredictions> preds,
                    const EvalOptions& opts) {
  EvalResult result;
  for (const auto& run : ds.runs) {
    const RunPredictions* rp = nullptr;
    for (const auto& p : preds)
      if (p.video_id == run.meta.video_id &&
          p.participant_id == run.participant_id) {
        rp = &p;
        break;
      }
    if (!rp) continue;

    for (const auto& [decoder, frames] : rp->by_decoder) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& rec : run.records) {
        if (!rec.target_box) continue;
        const auto it = frames.find(rec.frame_index);
        if (it == frames.end()) {
          if (opts.count_abstain_as_zero) ++n;
          continue;
        }
        sum += iou(it->second, *rec.target_box);
        ++n;
      }
      if (n == 0) continue;
      result.rows.push_back({run.meta.video_id, run.participant_id, decoder,
                             sum / static_cast<double>(n), n});
    }
  }
  return result;
}

namespace {

EvalSummary summarize(const std::string& decoder, std::span<const double> values) {
  EvalSummary s;
  s.decoder = decoder;
  s.participants = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean_iou += v;
  s.mean_iou /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean_iou) * (v - s.mean_iou);
  s.std_iou = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

std::vector<std::string> decoder_names(std::span<const RunScore> rows) {
  std::vector<std::string> names;
  for (const auto& r : rows) names.push_back(r.decoder);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

}  // namespace

std::vector<std::string> EvalResult::video_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.video_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<EvalSummary> EvalResult::per_video(const std::string& video_id) const {
  std::vector<EvalSummary> out;
  for (const auto& decoder : decoder_names(rows)) {
    std::vector<double> values;
    for (const auto& r : rows)
      if (r.video_id == video_id && r.decoder == decoder)
        values.push_back(r.mean_iou);
    out.push_back(summarize(decoder, values));
  }
  return out;
}

std::vector<EvalSummary> EvalResult::aggregate() const {
  std::vector<EvalSummary> out;
  std::vector<std::string> participants;
  for (const auto& r : rows) participants.push_back(r.participant_id);
  participants = sorted_unique(std::move(participants));

  for (const auto& decoder : decoder_names(rows)) {
    std::vector<double> by_participant;
    for (const auto& pid : participants) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : rows)
        if (r.participant_id == pid && r.decoder == decoder) {
          sum += r.mean_iou;  // videos weighted equally
          ++n;
        }
      if (n) by_participant.push_back(sum / static_cast<double>(n));
    }
    out.push_back(summarize(decoder, by_participant));
  }
  return out;
}

void EvalResult::write_csv(std::ostream& out) const {
  out << "video,decoder,mean_iou,std_iou\n";
  for (const auto& vid : video_ids())
    for (const auto& s : per_video(vid))
      out << vid << ',' << s.decoder << ',' << fmt_double(s.mean_iou) << ','
          << fmt_double(s.std_iou) << '\n';
  for (const auto& s : aggregate())
    out << "all," << s.decoder << ',' << fmt_double(s.mean_iou) << ','
        << fmt_double(s.std_iou) << '\n';
}

void EvalResult::write_table(std::ostream& out) const {
  char buf[64];
  out << "Decoder            Mean IoU (std across participants)\n";
  for (const auto& s : aggregate()) {
    std::snprintf(buf, sizeof buf, "%-18s %.4f (%.4f)%s\n", s.decoder.c_str(),
                  s.mean_iou, s.std_iou,
                  s.decoder == "od_oracle" ? "  [reference only]" : "");
    out << buf;
  }
  for (const auto& vid : video_ids()) {
    out << "\n" << vid << "\n";
    for (const auto& s : per_video(vid)) {
      std::snprintf(buf, sizeof buf, "  %-16s %.4f (%.4f)%s\n", s.decoder.c_str(),
                    s.mean_iou, s.std_iou,
                    s.decoder == "od_oracle" ? "  [reference only]" : "");
      out << buf;
    }
  }
}

CleaningReport summarize_dataset(Dataset ds, const CleaningConfig& cfg) {
  return clean_dataset(ds, cfg);
}

}  // namespace gazedec
