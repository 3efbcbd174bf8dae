// SPDX-License-Identifier: Apache-2.0
#include "gazedec/commands.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"
#include "gazedec/nn/checkpoint.hpp"
#include "gazedec/nn/gradcheck.hpp"

namespace gazedec::commands {

namespace {

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write " + p.string());
  return out;
}

Dataset load_cleaned(const RunConfig& cfg, const fs::path& manifest,
                     CleaningReport* report = nullptr) {
  Dataset ds = load_dataset(manifest, {cfg.min_detection_confidence});
  CleaningReport r = clean_dataset(ds, cfg.cleaning);
  if (report) *report = std::move(r);
  return ds;
}

std::string pred_file_name(const std::string& video, const std::string& pid) {
  return "pred_" + video + "_" + pid + ".csv";
}

void write_prediction_files(const std::vector<RunPredictions>& preds,
                            const fs::path& out_dir) {
  auto index = open_out(out_dir / "index.csv");
  index << "video,participant,file\n";
  for (const auto& p : preds) {
    const std::string name = pred_file_name(p.video_id, p.participant_id);
    auto out = open_out(out_dir / name);
    write_predictions(out, p);
    index << p.video_id << ',' << p.participant_id << ',' << name << '\n';
  }
}

std::vector<RunPredictions> read_prediction_dir(const fs::path& dir) {
  std::ifstream index(dir / "index.csv");
  if (!index)
    throw ConsistencyError("no index.csv in prediction directory " + dir.string());
  std::string line;
  if (!std::getline(index, line) ||
      detail::strip_cr(line) != "video,participant,file")
    throw FormatError((dir / "index.csv").string() + ":1: bad header");
  std::vector<RunPredictions> out;
  std::size_t line_no = 1;
  while (std::getline(index, line)) {
    ++line_no;
    const auto trimmed = detail::strip_cr(line);
    if (trimmed.empty()) continue;
    const auto f = detail::split_csv(trimmed);
    if (f.size() != 3)
      throw FormatError::at((dir / "index.csv").string(), line_no,
                            "expected 3 fields");
    std::ifstream in(dir / std::string(f[2]), std::ios::binary);
    if (!in)
      throw ConsistencyError("missing prediction file " +
                             (dir / std::string(f[2])).string());
    RunPredictions p = parse_predictions(in, std::string(f[2]));
    p.video_id = std::string(f[0]);
    p.participant_id = std::string(f[1]);
    out.push_back(std::move(p));
  }
  return out;
}

nn::ProviderFactory make_provider_factory(const RunConfig& cfg,
                                          std::vector<std::string> vocabulary) {
  if (cfg.feature_source == "files") {
    const fs::path base = cfg.feature_dir;
    if (base.empty()) throw ConfigError("features.dir required for file features");
    return [base](const Run& run) -> std::unique_ptr<nn::FeatureProvider> {
      return std::make_unique<nn::FeatureFileLoader>(base / run.meta.video_id /
                                                     run.participant_id);
    };
  }
  const auto net = cfg.net;
  return [vocabulary = std::move(vocabulary),
          net](const Run& run) -> std::unique_ptr<nn::FeatureProvider> {
    return std::make_unique<nn::SyntheticRasterizer>(run, vocabulary, net.channels,
                                                     net.rows, net.cols);
  };
}

}  // namespace

fs::path synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  generate_dataset(cfg.synth, cfg.seed, out_dir);
  return out_dir / "manifest.json";
}

fs::path gen_targets(const RunConfig& cfg, const fs::path& tracks_csv, double fps,
                     int frame_count, const fs::path& out_dir) {
  if (fps <= 0.0 || frame_count <= 0)
    throw ConfigError("gen-targets needs positive fps and frame count");
  cfg.echo_into(out_dir);
  std::ifstream in(tracks_csv, std::ios::binary);
  if (!in) throw ConsistencyError("cannot open " + tracks_csv.string());
  const auto tracks = parse_tracks(in, tracks_csv.string());
  VideoMeta meta{"cli", fps, 0.0, 0.0, frame_count};
  RngStream rng = RngStream(cfg.seed).substream("targets");
  const TargetGenResult res =
      generate_target_list(tracks, meta, cfg.synth.switches, rng);
  auto out = open_out(out_dir / "assignments.csv");
  write_assignments(out, res.assignments);
  if (!res.full_coverage)
    open_out(out_dir / "warnings.txt")
        << "partial coverage: no visible object after "
        << detail::fmt_double(res.covered_until_s) << " s\n";
  return out_dir / "assignments.csv";
}

fs::path clean(const RunConfig& cfg, const fs::path& manifest,
               const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  const Manifest src = load_manifest(manifest);
  CleaningReport report;
  Dataset ds = load_cleaned(cfg, manifest, &report);

  // Cleaned dataset: tracks are copied through; gaze becomes one sample per
  // surviving frame at the frame start time, so realignment is exact.
  Manifest dst = src;
  const fs::path src_base = manifest.parent_path();
  for (const auto& v : src.videos) {
    fs::create_directories((out_dir / v.tracks_path).parent_path());
    fs::copy_file(src_base / v.tracks_path, out_dir / v.tracks_path,
                  fs::copy_options::overwrite_existing);
    if (!v.detections_path.empty())
      fs::copy_file(src_base / v.detections_path, out_dir / v.detections_path,
                    fs::copy_options::overwrite_existing);
  }
  for (const auto& run : ds.runs) {
    const RunEntry* entry = nullptr;
    for (const auto& r : dst.runs)
      if (r.video_id == run.meta.video_id &&
          r.participant_id == run.participant_id)
        entry = &r;
    if (!entry) throw ConsistencyError("cleaned run missing from manifest");

    std::vector<GazeSample> samples;
    for (const auto& rec : run.records)
      samples.push_back({rec.frame_index * 1000.0 / run.meta.fps, rec.gaze});
    auto gout = open_out(out_dir / entry->gaze_path);
    write_gaze_stream(gout, samples);
    auto aout = open_out(out_dir / entry->assignments_path);
    write_assignments(aout, run.assignments);
  }
  save_manifest(dst, out_dir / "manifest.json");

  auto csv = open_out(out_dir / "cleaning_report.csv");
  report.write_csv(csv);
  auto table = open_out(out_dir / "cleaning_report.txt");
  report.write_table(table);
  return out_dir / "manifest.json";
}

namespace {

std::map<std::string, FixedBoxPrior> fit_priors(const RunConfig& cfg,
                                                const Dataset& fit_ds,
                                                const Dataset& all_ds) {
  const Dataset& source = cfg.fit_prior_on_all ? all_ds : fit_ds;
  std::map<std::string, FixedBoxPrior> priors;
  for (const auto& run : source.runs)
    if (!priors.count(run.meta.video_id))
      priors[run.meta.video_id] =
          fit_fixed_box_prior(source.runs, run.meta.video_id);
  return priors;
}

}  // namespace

fs::path decode(const RunConfig& cfg, const fs::path& manifest,
                const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  const Dataset ds = load_cleaned(cfg, manifest);
  const SplitResult split = split_dataset(ds, cfg.split);

  const bool wants_fixed =
      std::find(cfg.decoders.begin(), cfg.decoders.end(), "fixed_box") !=
      cfg.decoders.end();
  std::map<std::string, FixedBoxPrior> priors;
  if (wants_fixed) priors = fit_priors(cfg, split.train, ds);

  RngStream root(cfg.seed);
  std::vector<RunPredictions> preds;
  for (const auto& run : split.test.runs) {
    const FixedBoxPrior* prior = nullptr;
    if (wants_fixed) {
      const auto it = priors.find(run.meta.video_id);
      if (it == priors.end())
        throw ConfigError("no training labels to fit a fixed-box prior for '" +
                          run.meta.video_id + "' (try decode.fit_prior_on_all)");
      prior = &it->second;
    }
    RngStream rng = root.substream("od-baseline/" + run.meta.video_id + "/" +
                                   run.participant_id);
    preds.push_back(decode_run(run, cfg.decoders, prior, rng));
  }
  write_prediction_files(preds, out_dir);
  return out_dir / "index.csv";
}

fs::path train(const RunConfig& cfg, const fs::path& manifest,
               const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  const Dataset ds = load_cleaned(cfg, manifest);
  const SplitResult outer = split_dataset(ds, cfg.split);

  Dataset train_ds = outer.train, val_ds;
  if (cfg.train.val_fraction > 0.0) {
    SplitSpec inner{SplitMode::WITHIN_RUN, 1.0 - cfg.train.val_fraction, cfg.seed,
                    false};
    SplitResult carve = split_dataset(train_ds, inner);
    train_ds = std::move(carve.train);
    val_ds = std::move(carve.test);
  }

  const auto vocabulary = nn::build_vocabulary(ds);
  const auto factory = make_provider_factory(cfg, vocabulary);
  nn::TrainedModel model =
      nn::train_model(train_ds, val_ds, cfg.net, cfg.train, factory, cfg.seed);
  model.vocabulary = vocabulary;

  nn::save_checkpoint(model, out_dir / "model.ckpt");
  auto log = open_out(out_dir / "training_log.csv");
  nn::write_train_log(log, model.log);
  return out_dir / "model.ckpt";
}

fs::path predict(const RunConfig& cfg, const fs::path& manifest,
                 const fs::path& checkpoint, const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  const nn::TrainedModel model = nn::load_checkpoint(checkpoint);
  const Dataset ds = load_cleaned(cfg, manifest);
  const SplitResult split = split_dataset(ds, cfg.split);

  RunConfig prov_cfg = cfg;
  prov_cfg.net = model.net;
  const auto factory = make_provider_factory(prov_cfg, model.vocabulary);

  nn::BoxDecoderNet<float> net(model.net);
  std::copy(model.params.begin(), model.params.end(), net.params().begin());
  const std::string decoder = model.net.recurrent ? "gru" : "feedforward";

  std::vector<RunPredictions> preds;
  for (const auto& run : split.test.runs) {
    const auto provider = factory(run);
    const auto boxes = nn::predict_run(run, *provider, net, model.train);
    RunPredictions p;
    p.video_id = run.meta.video_id;
    p.participant_id = run.participant_id;
    auto& frames = p.by_decoder[decoder];
    for (std::size_t i = 0; i < boxes.size(); ++i)
      frames[run.records[i].frame_index] = boxes[i];
    preds.push_back(std::move(p));
  }
  write_prediction_files(preds, out_dir);
  return out_dir / "index.csv";
}

fs::path evaluate_predictions(const RunConfig& cfg, const fs::path& manifest,
                              const std::vector<fs::path>& prediction_dirs,
                              const fs::path& out_dir, bool json_lines) {
  cfg.echo_into(out_dir);
  const Dataset ds = load_cleaned(cfg, manifest);

  // Merge prediction sets keyed by run; later directories add decoders.
  std::vector<RunPredictions> merged;
  for (const auto& dir : prediction_dirs) {
    for (auto& p : read_prediction_dir(dir)) {
      RunPredictions* slot = nullptr;
      for (auto& m : merged)
        if (m.video_id == p.video_id && m.participant_id == p.participant_id)
          slot = &m;
      if (!slot) {
        merged.push_back(std::move(p));
        continue;
      }
      for (auto& [decoder, frames] : p.by_decoder)
        slot->by_decoder[decoder] = std::move(frames);
    }
  }

  const EvalResult result = evaluate(ds, merged, cfg.eval);
  auto csv = open_out(out_dir / "report.csv");
  result.write_csv(csv);
  auto table = open_out(out_dir / "report.txt");
  result.write_table(table);
  if (json_lines) {
    auto jl = open_out(out_dir / "report.jsonl");
    for (const auto& vid : result.video_ids())
      for (const auto& s : result.per_video(vid))
        jl << "{\"video\":\"" << vid << "\",\"decoder\":\"" << s.decoder
           << "\",\"mean_iou\":" << detail::fmt_double(s.mean_iou)
           << ",\"std_iou\":" << detail::fmt_double(s.std_iou) << "}\n";
    for (const auto& s : result.aggregate())
      jl << "{\"video\":\"all\",\"decoder\":\"" << s.decoder
         << "\",\"mean_iou\":" << detail::fmt_double(s.mean_iou)
         << ",\"std_iou\":" << detail::fmt_double(s.std_iou) << "}\n";
  }
  return out_dir / "report.csv";
}

double gradcheck(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.echo_into(out_dir);
  nn::GradCheckConfig gc;
  gc.net = cfg.net;
  gc.loss = cfg.train.loss;
  gc.window = cfg.train.window;
  gc.seed = cfg.seed == 0 ? 7 : cfg.seed;
  const nn::GradCheckReport report = nn::grad_check(gc);
  auto out = open_out(out_dir / "gradcheck.txt");
  out << (report.passed() ? "PASS" : "FAIL")
      << " max_rel_err=" << detail::fmt_double(report.max_rel_err)
      << " max_abs_err=" << detail::fmt_double(report.max_abs_err)
      << " params_checked=" << report.params_checked << '\n';
  return report.max_rel_err;
}

}  // namespace gazedec::commands
