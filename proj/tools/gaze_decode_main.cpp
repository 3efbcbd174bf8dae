// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazedec/commands.hpp"
#include "gazedec/errors.hpp"

namespace {

struct GlobalArgs {
  std::string config_file;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

gazedec::RunConfig effective_config(const GlobalArgs& g) {
  gazedec::RunConfig cfg = g.config_file.empty()
                               ? gazedec::RunConfig::defaults()
                               : gazedec::RunConfig::load(g.config_file);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze-decode: attention decoding toolkit for gaze over tracked video"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_file, "JSON config file");
  app.add_option("--seed", g.seed, "root random seed (overrides config)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--format", g.format, "report format: csv or json-lines")
      ->check(CLI::IsMember({"csv", "json-lines"}));

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");

  auto* gen = app.add_subcommand("gen-targets",
                                 "generate viewing-target assignments for a track file");
  std::string tracks_csv;
  double fps = 30.0;
  int frames = 0;
  gen->add_option("--tracks", tracks_csv, "track CSV")->required();
  gen->add_option("--fps", fps, "video frame rate");
  gen->add_option("--frames", frames, "video frame count")->required();

  std::string manifest;
  auto add_manifest = [&manifest](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "dataset manifest.json")->required();
  };

  auto* clean = app.add_subcommand("clean", "run the cleaning pipeline");
  add_manifest(clean);

  auto* decode = app.add_subcommand("decode", "run heuristic decoders");
  add_manifest(decode);

  auto* train = app.add_subcommand("train", "train a decoding model");
  add_manifest(train);

  auto* predict = app.add_subcommand("predict", "predict with a trained model");
  add_manifest(predict);
  std::string checkpoint;
  predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();

  auto* eval = app.add_subcommand("eval", "evaluate prediction files");
  add_manifest(eval);
  std::vector<std::string> pred_dirs;
  eval->add_option("--pred", pred_dirs, "prediction directories")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients");

  CLI11_PARSE(app, argc, argv);

  try {
    const gazedec::RunConfig cfg = effective_config(g);
    namespace cmds = gazedec::commands;
    if (synth->parsed()) {
      std::cout << cmds::synth(cfg, g.out_dir).string() << "\n";
    } else if (gen->parsed()) {
      std::cout << cmds::gen_targets(cfg, tracks_csv, fps, frames, g.out_dir).string()
                << "\n";
    } else if (clean->parsed()) {
      std::cout << cmds::clean(cfg, manifest, g.out_dir).string() << "\n";
    } else if (decode->parsed()) {
      std::cout << cmds::decode(cfg, manifest, g.out_dir).string() << "\n";
    } else if (train->parsed()) {
      std::cout << cmds::train(cfg, manifest, g.out_dir).string() << "\n";
    } else if (predict->parsed()) {
      std::cout << cmds::predict(cfg, manifest, checkpoint, g.out_dir).string()
                << "\n";
    } else if (eval->parsed()) {
      std::vector<std::filesystem::path> dirs(pred_dirs.begin(), pred_dirs.end());
      std::cout << cmds::evaluate_predictions(cfg, manifest, dirs, g.out_dir,
                                              g.format == "json-lines")
                       .string()
                << "\n";
    } else if (gradcheck->parsed()) {
      const double err = cmds::gradcheck(cfg, g.out_dir);
      std::cout << "max relative gradient error: " << err << "\n";
      return err < 1e-4 ? 0 : 1;
    }
  } catch (const gazedec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
