// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazedec/cleaning.hpp"
#include "gazedec/experiment.hpp"
#include "gazedec/nn/net.hpp"
#include "gazedec/nn/train.hpp"
#include "gazedec/synth.hpp"

namespace gazedec {

/// Effective configuration for one CLI invocation: a JSON file mirroring
/// every module config, with defaults for absent keys. Unknown keys are
/// rejected. The effective config is echoed into every output directory.
struct RunConfig {
  std::uint64_t seed = 0;
  SynthSpec synth;
  CleaningConfig cleaning;
  double min_detection_confidence = 0.0;
  nn::NetConfig net;
  nn::ModelTrainConfig train;
  SplitSpec split;
  EvalOptions eval;
  bool fit_prior_on_all = false;
  std::vector<std::string> decoders = {"fixed_box", "od_baseline", "od_mod",
                                       "od_oracle"};
  std::string feature_source = "synthetic";  // or "files"
  std::string feature_dir;                   // for "files"

  static RunConfig defaults() { return {}; }
  static RunConfig load(const std::filesystem::path& file);

  std::string to_json_text() const;
  /// Write <out_dir>/config_echo.json.
  void echo_into(const std::filesystem::path& out_dir) const;
};

}  // namespace gazedec
