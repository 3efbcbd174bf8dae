// SPDX-License-Identifier: Apache-2.0
#include "gazedec/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"

namespace gazedec::nn {

namespace {

struct Batch {
  std::vector<Volume<double>> features;
  std::vector<double> gdm;
  std::vector<Corners<double>> truths;
};

Batch random_batch(const NetConfig& cfg, int window, RngStream& rng) {
  Batch b;
  for (int t = 0; t < window; ++t) {
    Volume<double> f(cfg.channels, cfg.rows, cfg.cols);
    for (double& v : f.v) v = rng.uniform(-1.0, 1.0);
    b.features.push_back(std::move(f));

    // boxes with healthy margins keep finite differences off the kinks
    const double cx = rng.uniform(0.3, 0.7);
    const double cy = rng.uniform(0.3, 0.7);
    const double w = rng.uniform(0.2, 0.4);
    const double h = rng.uniform(0.2, 0.4);
    b.truths.push_back({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
  }
  b.gdm.resize(static_cast<std::size_t>(cfg.rows) * cfg.cols);
  double max_v = 0.0;
  for (double& v : b.gdm) {
    v = rng.uniform(0.05, 1.0);
    max_v = std::max(max_v, v);
  }
  for (double& v : b.gdm) v /= max_v;
  return b;
}

}  // namespace

GradCheckReport grad_check(const GradCheckConfig& cfg) {
  cfg.net.validate();
  if (cfg.window < 1 || cfg.batches < 1 || cfg.step <= 0.0)
    throw ConfigError("grad check needs window >= 1, batches >= 1, step > 0");

  BoxDecoderNet<double> net(cfg.net);
  RngStream root(cfg.seed);
  RngStream init_rng = root.substream("init");
  net.init_params(init_rng);

  GradCheckReport report;
  Workspace<double> ws;
  std::vector<double> grads(net.layout().total);
  std::vector<double> alphas;

  for (int batch = 0; batch < cfg.batches; ++batch) {
    RngStream batch_rng = root.substream("batch-" + std::to_string(batch));
    const Batch b = random_batch(cfg.net, cfg.window, batch_rng);

    std::fill(grads.begin(), grads.end(), 0.0);
    net.train_window(b.features, b.gdm, b.truths, cfg.loss, grads, ws, &alphas);
    if (cfg.corruption != 0.0) grads[grads.size() / 2] += cfg.corruption;

    auto loss_at = [&]() {
      return net.window_loss(b.features, b.gdm, b.truths, cfg.loss, ws,
                             cfg.loss == LossKind::CIOU ? &alphas : nullptr);
    };

    auto params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + cfg.step;
      const double up = loss_at();
      params[i] = saved - cfg.step;
      const double down = loss_at();
      params[i] = saved;

      const double fd = (up - down) / (2.0 * cfg.step);
      const double a = grads[i];
      const double abs_err = std::abs(a - fd);
      const double rel = abs_err / std::max({1.0, std::abs(a), std::abs(fd)});
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.params_checked;
    }
  }
  return report;
}

}  // namespace gazedec::nn
