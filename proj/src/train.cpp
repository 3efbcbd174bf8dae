// SPDX-License-Identifier: Apache-2.0
#include "gazedec/nn/train.hpp"

#include <cmath>
#include <ostream>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"
#include "gazedec/nn/adam.hpp"

namespace gazedec::nn {

void ModelTrainConfig::validate() const {
  if (learning_rate <= 0.0 || weight_decay < 0.0 || epochs < 1 || window < 1 ||
      sigma_px <= 0.0 || val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("invalid training configuration");
  if (gdm_variant == GdmVariant::RAW)
    throw ConfigError("training needs a normalized or averaged density map");
}

void write_train_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,val_loss,val_mean_iou\n";
  for (const auto& row : log)
    out << row.epoch << ',' << detail::fmt_double(row.train_loss) << ','
        << detail::fmt_double(row.val_loss) << ','
        << detail::fmt_double(row.val_mean_iou) << '\n';
}

Corners<float> normalized_corners(const BBox& box, const VideoMeta& meta) {
  return {static_cast<float>(box.x_min / meta.width),
          static_cast<float>(box.y_min / meta.height),
          static_cast<float>(box.x_max / meta.width),
          static_cast<float>(box.y_max / meta.height)};
}

BBox denormalize_corners(const Corners<float>& c, const VideoMeta& meta) {
  return {c[0] * meta.width, c[1] * meta.height, c[2] * meta.width,
          c[3] * meta.height};
}

namespace {

/// Frames, density map and labels for one window of one run.
struct WindowBatch {
  std::vector<Volume<float>> features;
  std::vector<float> gdm;
  std::vector<Corners<float>> truths;
};

void check_run(const Run& run, const ModelTrainConfig& cfg) {
  if (static_cast<int>(run.records.size()) < cfg.window)
    throw ConfigError("run " + run.meta.video_id + "/" + run.participant_id +
                      " has fewer frames (" + std::to_string(run.records.size()) +
                      ") than the window (" + std::to_string(cfg.window) + ")");
  for (const auto& r : run.records)
    if (!r.gaze || !r.target_box)
      throw ConfigError("training needs cleaned runs (gaze and target on every frame)");
}

WindowBatch make_window(const Run& run, const FeatureProvider& provider,
                        const ModelTrainConfig& cfg, std::size_t start) {
  const int src_rows = static_cast<int>(std::lround(run.meta.height));
  const int src_cols = static_cast<int>(std::lround(run.meta.width));
  WindowBatch b;
  std::vector<Point> points;
  for (int k = 0; k < cfg.window; ++k) {
    const FrameRecord& rec = run.records[start + k];
    points.push_back(*rec.gaze);
    b.truths.push_back(normalized_corners(*rec.target_box, run.meta));
    Volume<float> f = provider.frame_features(rec.frame_index);
    b.features.push_back(std::move(f));
  }
  const GdmGrid grid =
      gdm_window_pooled(points, cfg.sigma_px, src_rows, src_cols,
                        provider.rows(), provider.cols(), cfg.gdm_variant);
  b.gdm.assign(grid.values.begin(), grid.values.end());
  return b;
}

std::size_t window_count(const Run& run, int window) {
  return run.records.size() - static_cast<std::size_t>(window) + 1;
}

}  // namespace

std::vector<BBox> predict_run(const Run& run, const FeatureProvider& provider,
                              const BoxDecoderNet<float>& net,
                              const ModelTrainConfig& cfg) {
  cfg.validate();
  check_run(run, cfg);
  const std::size_t n = run.records.size();
  std::vector<Corners<float>> sums(n, Corners<float>{0, 0, 0, 0});
  std::vector<int> counts(n, 0);

  Workspace<float> ws;
  for (std::size_t start = 0; start < window_count(run, cfg.window); ++start) {
    const WindowBatch b = make_window(run, provider, cfg, start);
    const auto corners = net.forward(b.features, b.gdm, ws);
    for (std::size_t k = 0; k < corners.size(); ++k) {
      for (int i = 0; i < 4; ++i) sums[start + k][i] += corners[k][i];
      ++counts[start + k];
    }
  }

  std::vector<BBox> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Corners<float> mean;
    for (int j = 0; j < 4; ++j) mean[j] = sums[i][j] / static_cast<float>(counts[i]);
    out[i] = denormalize_corners(mean, run.meta);
  }
  return out;
}

TrainedModel train_model(const Dataset& train_ds, const Dataset& val_ds,
                         const NetConfig& net_cfg, const ModelTrainConfig& cfg,
                         const ProviderFactory& providers, std::uint64_t seed) {
  cfg.validate();
  net_cfg.validate();
  if (train_ds.runs.empty()) throw ConfigError("no training runs");
  for (const auto& run : train_ds.runs) check_run(run, cfg);
  for (const auto& run : val_ds.runs) check_run(run, cfg);

  BoxDecoderNet<float> net(net_cfg);
  RngStream rng(seed);
  RngStream init_rng = rng.substream("model-init");
  net.init_params(init_rng);

  std::vector<std::unique_ptr<FeatureProvider>> train_prov, val_prov;
  for (const auto& run : train_ds.runs) train_prov.push_back(providers(run));
  for (const auto& run : val_ds.runs) val_prov.push_back(providers(run));
  for (const auto& p : train_prov)
    if (p->channels() != net_cfg.channels || p->rows() != net_cfg.rows ||
        p->cols() != net_cfg.cols)
      throw ConfigError("feature provider shape does not match the model");

  Adam<float> adam(net.layout().total, cfg.learning_rate, cfg.weight_decay);
  std::vector<float> grads(net.layout().total, 0.0f);
  Workspace<float> ws;

  TrainedModel model;
  model.net = net_cfg;
  model.train = cfg;
  model.seed = seed;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t windows = 0;
    for (std::size_t ri = 0; ri < train_ds.runs.size(); ++ri) {
      const Run& run = train_ds.runs[ri];
      for (std::size_t start = 0; start < window_count(run, cfg.window); ++start) {
        const WindowBatch b = make_window(run, *train_prov[ri], cfg, start);
        std::fill(grads.begin(), grads.end(), 0.0f);
        loss_sum += net.train_window(b.features, b.gdm, b.truths, cfg.loss,
                                     grads, ws);
        adam.step(net.params(), grads);
        ++windows;
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(windows);

    if (!val_ds.runs.empty()) {
      double val_loss_sum = 0.0;
      std::size_t val_windows = 0;
      double iou_sum = 0.0;
      std::size_t frames = 0;
      for (std::size_t ri = 0; ri < val_ds.runs.size(); ++ri) {
        const Run& run = val_ds.runs[ri];
        for (std::size_t start = 0; start < window_count(run, cfg.window); ++start) {
          const WindowBatch b = make_window(run, *val_prov[ri], cfg, start);
          val_loss_sum += net.window_loss(b.features, b.gdm, b.truths, cfg.loss, ws);
          ++val_windows;
        }
        const auto boxes = predict_run(run, *val_prov[ri], net, cfg);
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          iou_sum += iou(boxes[i], *run.records[i].target_box);
          ++frames;
        }
      }
      row.val_loss = val_loss_sum / static_cast<double>(val_windows);
      row.val_mean_iou = iou_sum / static_cast<double>(frames);
    } else {
      row.val_loss = std::nan("");
      row.val_mean_iou = std::nan("");
    }
    model.log.push_back(row);
  }

  const auto params = net.params();
  model.params.assign(params.begin(), params.end());
  return model;
}

}  // namespace gazedec::nn
