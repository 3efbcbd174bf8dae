// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazedec/cleaning.hpp"
#include "gazedec/decoders.hpp"
#include "gazedec/ingest.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

enum class SplitMode { BY_PARTICIPANT, BY_VIDEO, WITHIN_RUN };

struct SplitSpec {
  SplitMode mode = SplitMode::BY_PARTICIPANT;
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  /// BY_VIDEO only: train the even-numbered videos (2nd, 4th, ... in sorted
  /// order) and test each one's predecessor, ignoring train_fraction.
  bool pair_videos = false;

  void validate() const;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Deterministic partition by the chosen key; no frame lands in both halves.
SplitResult split_dataset(const Dataset& ds, const SplitSpec& spec);

// ---- Predictions ------------------------------------------------------------

/// Per-frame boxes for one run, keyed by decoder name then original frame
/// index. Frames a decoder abstained on are simply absent.
struct RunPredictions {
  std::string video_id;
  std::string participant_id;
  std::map<std::string, std::map<int, BBox>> by_decoder;
};

/// CSV `frame,decoder,x_min,y_min,x_max,y_max` (one run per file).
void write_predictions(std::ostream& out, const RunPredictions& preds);
RunPredictions parse_predictions(std::istream& in,
                                 const std::string& source = "<predictions>");

inline constexpr const char* kHeuristicDecoders[] = {"fixed_box", "od_baseline",
                                                     "od_mod", "od_oracle"};

/// Run the named heuristic decoders over every record of a (cleaned) run.
/// Frames missing what a decoder needs (gaze, detections, label for the
/// oracle) are skipped. The random fallback of od_baseline draws from
/// `rng`, one substream per run.
RunPredictions decode_run(const Run& run, std::span<const std::string> decoders,
                          const FixedBoxPrior* prior, RngStream& rng);

// ---- Evaluation --------------------------------------------------------------

struct EvalOptions {
  /// Count frames without a prediction as IoU 0 (instead of dropping them).
  bool count_abstain_as_zero = true;
};

struct RunScore {
  std::string video_id;
  std::string participant_id;
  std::string decoder;
  double mean_iou = 0.0;
  std::size_t frames = 0;
};

struct EvalSummary {
  std::string decoder;
  double mean_iou = 0.0;
  double std_iou = 0.0;  // population std across participants
  std::size_t participants = 0;
};

struct EvalResult {
  std::vector<RunScore> rows;

  /// Mean/std across participants for one video.
  std::vector<EvalSummary> per_video(const std::string& video_id) const;
  /// Participant-level means weight videos equally, then mean/std across
  /// participants.
  std::vector<EvalSummary> aggregate() const;
  std::vector<std::string> video_ids() const;

  /// Report CSVs: `video,decoder,mean_iou,std_iou` rows plus an `all` block,
  /// and a readable table. Both are byte-deterministic.
  void write_csv(std::ostream& out) const;
  void write_table(std::ostream& out) const;
};

/// Per-frame IoU against each record's target box, averaged per run.
EvalResult evaluate(const Dataset& ds, std::span<const RunPredictions> preds,
                    const EvalOptions& opts = {});

/// Cleaning-stage statistics of a dataset (operates on a copy).
CleaningReport summarize_dataset(Dataset ds, const CleaningConfig& cfg);

}  // namespace gazedec
