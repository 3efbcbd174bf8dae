// SPDX-License-Identifier: Apache-2.0
#include "gazedec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + where + key + "'");
}

template <class T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

SplitMode split_mode_from_string(const std::string& s) {
  if (s == "by_participant") return SplitMode::BY_PARTICIPANT;
  if (s == "by_video") return SplitMode::BY_VIDEO;
  if (s == "within_run") return SplitMode::WITHIN_RUN;
  throw ConfigError("unknown split.mode '" + s + "'");
}

std::string to_string(SplitMode m) {
  switch (m) {
    case SplitMode::BY_PARTICIPANT:
      return "by_participant";
    case SplitMode::BY_VIDEO:
      return "by_video";
    case SplitMode::WITHIN_RUN:
      return "within_run";
  }
  return "by_participant";
}

GdmVariant variant_from_string(const std::string& s) {
  if (s == "normalized") return GdmVariant::NORMALIZED;
  if (s == "averaged") return GdmVariant::AVERAGED;
  throw ConfigError("unknown gdm.variant '" + s + "' (normalized or averaged)");
}

void parse_scene(const json& j, SceneConfig& s) {
  reject_unknown(j,
                 {"width", "height", "fps", "duration_s", "object_count",
                  "min_size", "max_size", "min_speed", "max_speed", "class_pool",
                  "occlusion"},
                 "synth.scene.");
  get_to(j, "width", s.width);
  get_to(j, "height", s.height);
  get_to(j, "fps", s.fps);
  get_to(j, "duration_s", s.duration_s);
  get_to(j, "object_count", s.object_count);
  get_to(j, "min_size", s.min_size);
  get_to(j, "max_size", s.max_size);
  get_to(j, "min_speed", s.min_speed);
  get_to(j, "max_speed", s.max_speed);
  get_to(j, "class_pool", s.class_pool);
  get_to(j, "occlusion", s.occlusion);
}

void parse_synth(const json& j, SynthSpec& s) {
  reject_unknown(j, {"videos", "participants", "scene", "gaze", "switches", "detector"},
                 "synth.");
  get_to(j, "videos", s.videos);
  get_to(j, "participants", s.participants);
  if (j.contains("scene")) parse_scene(j.at("scene"), s.scene);
  if (j.contains("gaze")) {
    const json& g = j.at("gaze");
    reject_unknown(g,
                   {"sample_rate_hz", "pursuit_lag_ms", "noise_px", "blink_rate_hz",
                    "blink_min_ms", "blink_max_ms", "switch_latency_ms"},
                   "synth.gaze.");
    get_to(g, "sample_rate_hz", s.gaze.sample_rate_hz);
    get_to(g, "pursuit_lag_ms", s.gaze.pursuit_lag_ms);
    get_to(g, "noise_px", s.gaze.noise_px);
    get_to(g, "blink_rate_hz", s.gaze.blink_rate_hz);
    get_to(g, "blink_min_ms", s.gaze.blink_min_ms);
    get_to(g, "blink_max_ms", s.gaze.blink_max_ms);
    get_to(g, "switch_latency_ms", s.gaze.switch_latency_ms);
  }
  if (j.contains("switches")) {
    const json& w = j.at("switches");
    reject_unknown(w, {"minimum_s", "mean_excess_s"}, "synth.switches.");
    get_to(w, "minimum_s", s.switches.minimum_s);
    get_to(w, "mean_excess_s", s.switches.mean_excess_s);
  }
  if (j.contains("detector")) {
    const json& d = j.at("detector");
    reject_unknown(d, {"box_noise_px", "drop_prob", "spurious_rate"},
                   "synth.detector.");
    get_to(d, "box_noise_px", s.detector.box_noise_px);
    get_to(d, "drop_prob", s.detector.drop_prob);
    get_to(d, "spurious_rate", s.detector.spurious_rate);
  }
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }

  RunConfig cfg;
  try {
    reject_unknown(j,
                   {"seed", "synth", "cleaning", "ingest", "gdm", "model", "train",
                    "split", "eval", "decode", "features"},
                   "");
    get_to(j, "seed", cfg.seed);
    if (j.contains("synth")) parse_synth(j.at("synth"), cfg.synth);
    if (j.contains("cleaning")) {
      const json& c = j.at("cleaning");
      reject_unknown(
          c, {"transition_latency_ms", "max_impute_gap_frames", "overt_threshold_px"},
          "cleaning.");
      get_to(c, "transition_latency_ms", cfg.cleaning.transition_latency_ms);
      get_to(c, "max_impute_gap_frames", cfg.cleaning.max_impute_gap_frames);
      get_to(c, "overt_threshold_px", cfg.cleaning.overt_threshold_px);
    }
    if (j.contains("ingest")) {
      const json& c = j.at("ingest");
      reject_unknown(c, {"min_detection_confidence"}, "ingest.");
      get_to(c, "min_detection_confidence", cfg.min_detection_confidence);
    }
    if (j.contains("gdm")) {
      const json& g = j.at("gdm");
      reject_unknown(g, {"sigma_px", "variant"}, "gdm.");
      get_to(g, "sigma_px", cfg.train.sigma_px);
      if (g.contains("variant"))
        cfg.train.gdm_variant = variant_from_string(g.at("variant"));
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(
          m, {"kind", "channels", "rows", "cols", "embed_dim", "gru_hidden", "window"},
          "model.");
      if (m.contains("kind")) {
        const std::string kind = m.at("kind");
        if (kind == "feedforward")
          cfg.net.recurrent = false;
        else if (kind == "gru")
          cfg.net.recurrent = true;
        else
          throw ConfigError("model.kind must be feedforward or gru");
        // The spatial-only model looks at one frame at a time.
        cfg.train.window = cfg.net.recurrent ? 5 : 1;
      }
      get_to(m, "channels", cfg.net.channels);
      get_to(m, "rows", cfg.net.rows);
      get_to(m, "cols", cfg.net.cols);
      get_to(m, "embed_dim", cfg.net.embed_dim);
      get_to(m, "gru_hidden", cfg.net.gru_hidden);
      get_to(m, "window", cfg.train.window);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(
          t, {"learning_rate", "weight_decay", "epochs", "loss", "val_fraction"},
          "train.");
      get_to(t, "learning_rate", cfg.train.learning_rate);
      get_to(t, "weight_decay", cfg.train.weight_decay);
      get_to(t, "epochs", cfg.train.epochs);
      if (t.contains("loss"))
        cfg.train.loss = nn::loss_kind_from_string(t.at("loss"));
      get_to(t, "val_fraction", cfg.train.val_fraction);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      reject_unknown(s, {"mode", "train_fraction", "pair_videos"}, "split.");
      if (s.contains("mode")) cfg.split.mode = split_mode_from_string(s.at("mode"));
      get_to(s, "train_fraction", cfg.split.train_fraction);
      get_to(s, "pair_videos", cfg.split.pair_videos);
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      reject_unknown(e, {"count_abstain_as_zero"}, "eval.");
      get_to(e, "count_abstain_as_zero", cfg.eval.count_abstain_as_zero);
    }
    if (j.contains("decode")) {
      const json& d = j.at("decode");
      reject_unknown(d, {"decoders", "fit_prior_on_all"}, "decode.");
      get_to(d, "decoders", cfg.decoders);
      get_to(d, "fit_prior_on_all", cfg.fit_prior_on_all);
    }
    if (j.contains("features")) {
      const json& f = j.at("features");
      reject_unknown(f, {"source", "dir"}, "features.");
      get_to(f, "source", cfg.feature_source);
      get_to(f, "dir", cfg.feature_dir);
      if (cfg.feature_source != "synthetic" && cfg.feature_source != "files")
        throw ConfigError("features.source must be synthetic or files");
    }
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return cfg;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["synth"] = {
      {"videos", synth.videos},
      {"participants", synth.participants},
      {"scene",
       {{"width", synth.scene.width},
        {"height", synth.scene.height},
        {"fps", synth.scene.fps},
        {"duration_s", synth.scene.duration_s},
        {"object_count", synth.scene.object_count},
        {"min_size", synth.scene.min_size},
        {"max_size", synth.scene.max_size},
        {"min_speed", synth.scene.min_speed},
        {"max_speed", synth.scene.max_speed},
        {"class_pool", synth.scene.class_pool},
        {"occlusion", synth.scene.occlusion}}},
      {"gaze",
       {{"sample_rate_hz", synth.gaze.sample_rate_hz},
        {"pursuit_lag_ms", synth.gaze.pursuit_lag_ms},
        {"noise_px", synth.gaze.noise_px},
        {"blink_rate_hz", synth.gaze.blink_rate_hz},
        {"blink_min_ms", synth.gaze.blink_min_ms},
        {"blink_max_ms", synth.gaze.blink_max_ms},
        {"switch_latency_ms", synth.gaze.switch_latency_ms}}},
      {"switches",
       {{"minimum_s", synth.switches.minimum_s},
        {"mean_excess_s", synth.switches.mean_excess_s}}},
      {"detector",
       {{"box_noise_px", synth.detector.box_noise_px},
        {"drop_prob", synth.detector.drop_prob},
        {"spurious_rate", synth.detector.spurious_rate}}}};
  j["cleaning"] = {{"transition_latency_ms", cleaning.transition_latency_ms},
                   {"max_impute_gap_frames", cleaning.max_impute_gap_frames},
                   {"overt_threshold_px", cleaning.overt_threshold_px}};
  j["ingest"] = {{"min_detection_confidence", min_detection_confidence}};
  j["gdm"] = {{"sigma_px", train.sigma_px},
              {"variant", train.gdm_variant == GdmVariant::AVERAGED ? "averaged"
                                                                    : "normalized"}};
  j["model"] = {{"kind", net.recurrent ? "gru" : "feedforward"},
                {"channels", net.channels},
                {"rows", net.rows},
                {"cols", net.cols},
                {"embed_dim", net.embed_dim},
                {"gru_hidden", net.gru_hidden},
                {"window", train.window}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"weight_decay", train.weight_decay},
                {"epochs", train.epochs},
                {"loss", nn::to_string(train.loss)},
                {"val_fraction", train.val_fraction}};
  j["split"] = {{"mode", to_string(split.mode)},
                {"train_fraction", split.train_fraction},
                {"pair_videos", split.pair_videos}};
  j["eval"] = {{"count_abstain_as_zero", eval.count_abstain_as_zero}};
  j["decode"] = {{"decoders", decoders}, {"fit_prior_on_all", fit_prior_on_all}};
  j["features"] = {{"source", feature_source}, {"dir", feature_dir}};
  return j.dump(2) + "\n";
}

void RunConfig::echo_into(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "config_echo.json", std::ios::binary);
  if (!out)
    throw ConsistencyError("cannot write config echo under " + out_dir.string());
  out << to_json_text();
}

}  // namespace gazedec
