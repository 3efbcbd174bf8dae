// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gazedec/gdm.hpp"
#include "gazedec/ingest.hpp"
#include "gazedec/nn/features.hpp"
#include "gazedec/nn/loss.hpp"
#include "gazedec/nn/net.hpp"

namespace gazedec::nn {

struct ModelTrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 30;
  LossKind loss = LossKind::L1;
  int window = 1;  // frames per sliding window
  double sigma_px = 500.0;
  GdmVariant gdm_variant = GdmVariant::NORMALIZED;
  double val_fraction = 0.2;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mean_iou = 0.0;
};

/// CSV `epoch,train_loss,val_loss,val_mean_iou`.
void write_train_log(std::ostream& out, std::span<const EpochLog> log);

struct TrainedModel {
  NetConfig net;
  std::vector<float> params;
  std::vector<std::string> vocabulary;
  ModelTrainConfig train;
  std::uint64_t seed = 0;
  std::vector<EpochLog> log;
};

using ProviderFactory =
    std::function<std::unique_ptr<FeatureProvider>(const Run&)>;

/// Sliding-window training over cleaned runs: every window [T, T + window)
/// of every training run feeds one gradient update per epoch, in order.
/// Deterministic given the seed. Throws ConfigError when a run is shorter
/// than the window.
TrainedModel train_model(const Dataset& train_ds, const Dataset& val_ds,
                         const NetConfig& net_cfg, const ModelTrainConfig& cfg,
                         const ProviderFactory& providers, std::uint64_t seed);

/// Predict one box per frame of a run: run the model over every sliding
/// window, then average the normalized corners of all windows covering each
/// frame and scale back to pixels.
std::vector<BBox> predict_run(const Run& run, const FeatureProvider& provider,
                              const BoxDecoderNet<float>& net,
                              const ModelTrainConfig& cfg);

/// Corner-box helpers shared by training and prediction.
Corners<float> normalized_corners(const BBox& box, const VideoMeta& meta);
BBox denormalize_corners(const Corners<float>& c, const VideoMeta& meta);

}  // namespace gazedec::nn
