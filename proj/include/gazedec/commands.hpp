// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "gazedec/config.hpp"

namespace gazedec::commands {

namespace fs = std::filesystem;

/// Batch entry points behind the CLI subcommands. Each writes its outputs
/// (plus config_echo.json) under out_dir and is rerunnable: identical inputs
/// and seed produce identical bytes.

/// Generate a synthetic dataset; returns the manifest path.
fs::path synth(const RunConfig& cfg, const fs::path& out_dir);

/// Generate a viewing-target assignment CSV for one track file.
fs::path gen_targets(const RunConfig& cfg, const fs::path& tracks_csv, double fps,
                     int frame_count, const fs::path& out_dir);

/// Clean a dataset; writes the cleaned dataset (new manifest) plus the
/// cleaning report (CSV and table).
fs::path clean(const RunConfig& cfg, const fs::path& manifest,
               const fs::path& out_dir);

/// Run heuristic decoders over the held-out split; writes per-run prediction
/// CSVs plus an index.csv.
fs::path decode(const RunConfig& cfg, const fs::path& manifest,
                const fs::path& out_dir);

/// Train a model on the training split; writes checkpoint + training log.
fs::path train(const RunConfig& cfg, const fs::path& manifest,
               const fs::path& out_dir);

/// Predict with a trained checkpoint over the held-out split.
fs::path predict(const RunConfig& cfg, const fs::path& manifest,
                 const fs::path& checkpoint, const fs::path& out_dir);

/// Evaluate prediction directories against a dataset; writes report files.
/// `json_lines` additionally emits report.jsonl.
fs::path evaluate_predictions(const RunConfig& cfg, const fs::path& manifest,
                              const std::vector<fs::path>& prediction_dirs,
                              const fs::path& out_dir, bool json_lines = false);

/// Verify analytic gradients; returns the max relative error (also written
/// to gradcheck.txt).
double gradcheck(const RunConfig& cfg, const fs::path& out_dir);

}  // namespace gazedec::commands
