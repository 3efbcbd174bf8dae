// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gazedec/errors.hpp"
#include "gazedec/nn/loss.hpp"
#include "gazedec/nn/tensor.hpp"
#include "gazedec/rng.hpp"

namespace gazedec::nn {

/// Architecture hyperparameters. The tower is fixed in shape: two 3x3
/// convolutions (stride 1, pad 1) each followed by 2x2 max pooling, doubling
/// the channel count at each step, then a dense embedding. The recurrent
/// variant runs a single-layer GRU over the per-frame embeddings; the
/// feedforward variant maps each embedding straight to the output head.
struct NetConfig {
  int channels = 8;      // feature-map channels C
  int rows = 128;        // feature-map height (divisible by 4)
  int cols = 128;        // feature-map width (divisible by 4)
  int embed_dim = 512;
  int gru_hidden = 512;  // recurrent variant only
  bool recurrent = false;

  void validate() const {
    if (channels < 1 || rows < 4 || cols < 4 || rows % 4 || cols % 4)
      throw ConfigError("feature dims must be positive and divisible by 4");
    if (embed_dim < 1 || (recurrent && gru_hidden < 1))
      throw ConfigError("embedding/hidden sizes must be positive");
  }

  int flat_dim() const { return 4 * channels * (rows / 4) * (cols / 4); }
  int head_in() const { return recurrent ? gru_hidden : embed_dim; }
};

struct NamedTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
  int fan_in = 1;
};

struct ParamLayout {
  std::vector<NamedTensor> tensors;
  std::size_t total = 0;

  void add(std::string name, std::size_t count, int fan_in) {
    tensors.push_back({std::move(name), total, count, fan_in});
    total += count;
  }
  const NamedTensor& find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    throw DomainError("no parameter tensor named " + name);
  }
};

inline ParamLayout make_layout(const NetConfig& cfg) {
  cfg.validate();
  const int c = cfg.channels;
  ParamLayout lay;
  lay.add("conv1.weight", std::size_t(2 * c) * c * 9, c * 9);
  lay.add("conv1.bias", 2 * c, c * 9);
  lay.add("conv2.weight", std::size_t(4 * c) * 2 * c * 9, 2 * c * 9);
  lay.add("conv2.bias", 4 * c, 2 * c * 9);
  lay.add("embed.weight", std::size_t(cfg.embed_dim) * cfg.flat_dim(), cfg.flat_dim());
  lay.add("embed.bias", cfg.embed_dim, cfg.flat_dim());
  if (cfg.recurrent) {
    lay.add("gru.w_ih", std::size_t(3 * cfg.gru_hidden) * cfg.embed_dim, cfg.gru_hidden);
    lay.add("gru.w_hh", std::size_t(3 * cfg.gru_hidden) * cfg.gru_hidden, cfg.gru_hidden);
    lay.add("gru.b_ih", 3 * cfg.gru_hidden, cfg.gru_hidden);
    lay.add("gru.b_hh", 3 * cfg.gru_hidden, cfg.gru_hidden);
  }
  lay.add("head.weight", std::size_t(4) * cfg.head_in(), cfg.head_in());
  lay.add("head.bias", 4, cfg.head_in());
  return lay;
}

// ---- Primitive layers ------------------------------------------------------

template <class S>
using MatMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;
template <class S>
using VecMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <class S>
using MutVecMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <class S>
using MutMatMap =
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// 3x3 convolution, stride 1, pad 1 (same spatial size).
template <class S>
void conv3x3_forward(const Volume<S>& in, std::span<const S> weight,
                     std::span<const S> bias, Volume<S>& out) {
  const int h = in.h, w = in.w;
  for (int co = 0; co < out.c; ++co) {
    S* plane = out.plane(co);
    std::fill(plane, plane + std::size_t(h) * w, bias[co]);
    for (int ci = 0; ci < in.c; ++ci) {
      const S* src = in.plane(ci);
      const S* k = &weight[((std::size_t(co) * in.c) + ci) * 9];
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
          const S wgt = k[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            const S* srow = src + std::size_t(y + ky - 1) * w + (kx - 1);
            S* orow = plane + std::size_t(y) * w;
            for (int x = x0; x < x1; ++x) orow[x] += wgt * srow[x];
          }
        }
      }
    }
  }
}

/// Backward for conv3x3: accumulates weight/bias grads; writes the input
/// grad only when requested (the first layer never needs it).
template <class S>
void conv3x3_backward(const Volume<S>& in, std::span<const S> weight,
                      const Volume<S>& d_out, Volume<S>* d_in,
                      std::span<S> d_weight, std::span<S> d_bias) {
  const int h = in.h, w = in.w;
  if (d_in) d_in->zero();
  for (int co = 0; co < d_out.c; ++co) {
    const S* dplane = d_out.plane(co);
    S acc = S(0);
    for (std::size_t i = 0; i < std::size_t(h) * w; ++i) acc += dplane[i];
    d_bias[co] += acc;
    for (int ci = 0; ci < in.c; ++ci) {
      const S* src = in.plane(ci);
      S* dsrc = d_in ? d_in->plane(ci) : nullptr;
      const std::size_t kbase = ((std::size_t(co) * in.c) + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
          const S wgt = weight[kbase + ky * 3 + kx];
          S wacc = S(0);
          for (int y = y0; y < y1; ++y) {
            const S* srow = src + std::size_t(y + ky - 1) * w + (kx - 1);
            const S* drow = dplane + std::size_t(y) * w;
            if (dsrc) {
              S* drow_in = dsrc + std::size_t(y + ky - 1) * w + (kx - 1);
              for (int x = x0; x < x1; ++x) {
                wacc += srow[x] * drow[x];
                drow_in[x] += wgt * drow[x];
              }
            } else {
              for (int x = x0; x < x1; ++x) wacc += srow[x] * drow[x];
            }
          }
          d_weight[kbase + ky * 3 + kx] += wacc;
        }
      }
    }
  }
}

template <class S>
void relu_forward(Volume<S>& x) {
  for (S& v : x.v) v = v > S(0) ? v : S(0);
}

/// d_x masked by the post-activation values (zero where the unit was off).
template <class S>
void relu_backward(const Volume<S>& post, Volume<S>& d_x) {
  for (std::size_t i = 0; i < post.v.size(); ++i)
    if (post.v[i] <= S(0)) d_x.v[i] = S(0);
}

/// 2x2 max pooling, stride 2. Records flat argmax indices for the backward
/// pass; ties go to the first cell in scan order.
template <class S>
void maxpool2x2_forward(const Volume<S>& in, Volume<S>& out,
                        std::vector<std::size_t>& argmax) {
  const int oh = in.h / 2, ow = in.w / 2;
  argmax.resize(out.size());
  for (int ci = 0; ci < in.c; ++ci) {
    const S* src = in.plane(ci);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const std::size_t base = std::size_t(2 * y) * in.w + 2 * x;
        std::size_t best = base;
        S bv = src[base];
        const std::size_t cand[3] = {base + 1, base + in.w, base + in.w + 1};
        for (std::size_t idx : cand)
          if (src[idx] > bv) {
            bv = src[idx];
            best = idx;
          }
        const std::size_t o = (std::size_t(ci) * oh + y) * ow + x;
        out.v[o] = bv;
        argmax[o] = std::size_t(ci) * in.h * in.w + best;
      }
    }
  }
}

template <class S>
void maxpool2x2_backward(const Volume<S>& d_out,
                         const std::vector<std::size_t>& argmax, Volume<S>& d_in) {
  d_in.zero();
  for (std::size_t o = 0; o < d_out.v.size(); ++o) d_in.v[argmax[o]] += d_out.v[o];
}

// ---- Full decoder network ---------------------------------------------------

/// Scratch space for one window's forward/backward pass.
template <class S>
struct Workspace {
  struct FrameActs {
    Volume<S> weighted, conv1, pool1, conv2, pool2;
    std::vector<std::size_t> arg1, arg2;
    std::vector<S> embed_pre, embed;  // pre/post activation
    std::array<S, 4> logits{}, corners{};
    S sig[4];  // squash sigmoids
  };
  std::vector<FrameActs> frames;
  // GRU internals per step
  std::vector<std::vector<S>> h;              // h[t], t = 0..T (h[0] = 0)
  std::vector<std::vector<S>> r, z, n, hn_lin;
  // backward scratch
  Volume<S> d_pool2, d_conv2, d_pool1, d_conv1;
};

/// End-to-end attention decoding network over gaze-weighted feature maps.
template <class S>
class BoxDecoderNet {
 public:
  explicit BoxDecoderNet(const NetConfig& cfg)
      : cfg_(cfg), layout_(make_layout(cfg)), params_(layout_.total, S(0)) {}

  const NetConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<S> params() { return params_; }
  std::span<const S> params() const { return params_; }

  /// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init_params(RngStream& rng) {
    for (const auto& t : layout_.tensors) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
      for (std::size_t i = 0; i < t.count; ++i)
        params_[t.offset + i] = S(rng.uniform(-bound, bound));
    }
  }

  /// Forward one window. `features[t]` is the frame's feature map, `gdm` the
  /// shared window density map (rows x cols). Returns one normalized corner
  /// box per frame.
  std::vector<Corners<S>> forward(std::span<const Volume<S>> features,
                                  std::span<const S> gdm, Workspace<S>& ws) const {
    prepare(features, gdm, ws);
    std::vector<Corners<S>> out(features.size());
    for (std::size_t t = 0; t < features.size(); ++t) out[t] = ws.frames[t].corners;
    return out;
  }

  /// Forward + loss (mean over frames). When `frozen_alphas` is supplied the
  /// CIoU trade-off coefficients are taken from it instead of being computed
  /// at the current point; `alphas_out`, when given, receives the
  /// coefficients actually used.
  S window_loss(std::span<const Volume<S>> features, std::span<const S> gdm,
                std::span<const Corners<S>> truths, LossKind kind, Workspace<S>& ws,
                const std::vector<S>* frozen_alphas = nullptr,
                std::vector<S>* alphas_out = nullptr) const {
    prepare(features, gdm, ws);
    S total = S(0);
    if (alphas_out) alphas_out->assign(features.size(), S(0));
    for (std::size_t t = 0; t < features.size(); ++t) {
      std::optional<S> fa;
      if (frozen_alphas) fa = (*frozen_alphas)[t];
      const auto lg = box_loss<S>(kind, ws.frames[t].corners, truths[t], fa);
      if (alphas_out) (*alphas_out)[t] = lg.ciou_alpha;
      total += lg.value;
    }
    return total / S(features.size());
  }

  /// Forward + backward over one window; accumulates parameter gradients
  /// into `grads` (same layout as params) and returns the window loss.
  S train_window(std::span<const Volume<S>> features, std::span<const S> gdm,
                 std::span<const Corners<S>> truths, LossKind kind,
                 std::span<S> grads, Workspace<S>& ws,
                 std::vector<S>* alphas_out = nullptr) const {
    prepare(features, gdm, ws);
    const std::size_t frames = features.size();
    const S inv_frames = S(1) / S(frames);
    if (alphas_out) alphas_out->assign(frames, S(0));

    S total = S(0);
    std::vector<std::array<S, 4>> d_logits(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      const auto lg = box_loss<S>(kind, ws.frames[t].corners, truths[t]);
      if (alphas_out) (*alphas_out)[t] = lg.ciou_alpha;
      total += lg.value;
      d_logits[t] = squash_backward(ws.frames[t], scale4(lg.d_pred, inv_frames));
    }
    backward(features.size(), d_logits, grads, ws);
    return total * inv_frames;
  }

 private:
  static std::array<S, 4> scale4(const std::array<S, 4>& a, S k) {
    return {a[0] * k, a[1] * k, a[2] * k, a[3] * k};
  }

  std::span<const S> tensor(const char* name) const {
    const auto& t = layout_.find(name);
    return {params_.data() + t.offset, t.count};
  }
  static std::span<S> tensor_of(std::span<S> vec, const ParamLayout& lay,
                                const char* name) {
    const auto& t = lay.find(name);
    return {vec.data() + t.offset, t.count};
  }

  // logits -> normalized corners. With u, v the relative box position and
  // pw, ph the box size (all sigmoids), corners stay inside [0, 1] and
  // min <= max holds for any logits.
  void squash_forward(typename Workspace<S>::FrameActs& fa) const {
    for (int i = 0; i < 4; ++i) fa.sig[i] = S(1) / (S(1) + std::exp(-fa.logits[i]));
    const S u = fa.sig[0], v = fa.sig[1], pw = fa.sig[2], ph = fa.sig[3];
    fa.corners[0] = u * (S(1) - pw);
    fa.corners[1] = v * (S(1) - ph);
    fa.corners[2] = fa.corners[0] + pw;
    fa.corners[3] = fa.corners[1] + ph;
  }

  std::array<S, 4> squash_backward(const typename Workspace<S>::FrameActs& fa,
                                   const std::array<S, 4>& d_corners) const {
    const S u = fa.sig[0], v = fa.sig[1], pw = fa.sig[2], ph = fa.sig[3];
    const S du = (d_corners[0] + d_corners[2]) * (S(1) - pw);
    const S dv = (d_corners[1] + d_corners[3]) * (S(1) - ph);
    const S dpw = -u * d_corners[0] + (S(1) - u) * d_corners[2];
    const S dph = -v * d_corners[1] + (S(1) - v) * d_corners[3];
    const std::array<S, 4> d_sig{du, dv, dpw, dph};
    std::array<S, 4> d_logits;
    for (int i = 0; i < 4; ++i)
      d_logits[i] = d_sig[i] * fa.sig[i] * (S(1) - fa.sig[i]);
    return d_logits;
  }

  void prepare(std::span<const Volume<S>> features, std::span<const S> gdm,
               Workspace<S>& ws) const {
    if (features.empty()) throw DomainError("window has no frames");
    const int c = cfg_.channels, h = cfg_.rows, w = cfg_.cols;
    if (gdm.size() != std::size_t(h) * w)
      throw DomainError("density map does not match feature resolution");

    ws.frames.resize(features.size());
    if (cfg_.recurrent) {
      const int H = cfg_.gru_hidden;
      ws.h.assign(features.size() + 1, std::vector<S>(H, S(0)));
      ws.r.assign(features.size(), std::vector<S>(H));
      ws.z.assign(features.size(), std::vector<S>(H));
      ws.n.assign(features.size(), std::vector<S>(H));
      ws.hn_lin.assign(features.size(), std::vector<S>(H));
    }

    for (std::size_t t = 0; t < features.size(); ++t) {
      const Volume<S>& f = features[t];
      if (f.c != c || f.h != h || f.w != w)
        throw DomainError("feature map shape mismatch");
      auto& fa = ws.frames[t];

      // gaze weighting: every channel scaled cellwise by the density map
      fa.weighted = Volume<S>(c, h, w);
      for (int ci = 0; ci < c; ++ci) {
        const S* src = f.plane(ci);
        S* dst = fa.weighted.plane(ci);
        for (std::size_t i = 0; i < std::size_t(h) * w; ++i) dst[i] = src[i] * gdm[i];
      }

      fa.conv1 = Volume<S>(2 * c, h, w);
      conv3x3_forward(fa.weighted, tensor("conv1.weight"), tensor("conv1.bias"),
                      fa.conv1);
      relu_forward(fa.conv1);
      fa.pool1 = Volume<S>(2 * c, h / 2, w / 2);
      maxpool2x2_forward(fa.conv1, fa.pool1, fa.arg1);

      fa.conv2 = Volume<S>(4 * c, h / 2, w / 2);
      conv3x3_forward(fa.pool1, tensor("conv2.weight"), tensor("conv2.bias"),
                      fa.conv2);
      relu_forward(fa.conv2);
      fa.pool2 = Volume<S>(4 * c, h / 4, w / 4);
      maxpool2x2_forward(fa.conv2, fa.pool2, fa.arg2);

      // dense embedding over the flattened tower output
      const int flat = cfg_.flat_dim();
      const int E = cfg_.embed_dim;
      fa.embed_pre.resize(E);
      const auto ew = tensor("embed.weight");
      const auto eb = tensor("embed.bias");
      MatMap<S> W(ew.data(), E, flat);
      VecMap<S> x(fa.pool2.v.data(), flat);
      MutVecMap<S>(fa.embed_pre.data(), E) = W * x + VecMap<S>(eb.data(), E);
      fa.embed = fa.embed_pre;
      for (S& e : fa.embed) e = e > S(0) ? e : S(0);

      if (cfg_.recurrent) {
        gru_step(fa.embed, ws.h[t], tensor("gru.w_ih"), tensor("gru.w_hh"),
                 tensor("gru.b_ih"), tensor("gru.b_hh"), ws.r[t], ws.z[t],
                 ws.n[t], ws.hn_lin[t], ws.h[t + 1]);
      }
    }

    const auto hw = tensor("head.weight");
    const auto hb = tensor("head.bias");
    const int hin = cfg_.head_in();
    MatMap<S> Wh(hw.data(), 4, hin);
    for (std::size_t t = 0; t < features.size(); ++t) {
      auto& fa = ws.frames[t];
      const S* in = cfg_.recurrent ? ws.h[t + 1].data() : fa.embed.data();
      Eigen::Matrix<S, 4, 1> y = Wh * VecMap<S>(in, hin) + VecMap<S>(hb.data(), 4);
      for (int i = 0; i < 4; ++i) fa.logits[i] = y[i];
      squash_forward(fa);
    }
  }

  void gru_step(const std::vector<S>& x, const std::vector<S>& h_prev,
                std::span<const S> w_ih, std::span<const S> w_hh,
                std::span<const S> b_ih, std::span<const S> b_hh,
                std::vector<S>& r, std::vector<S>& z, std::vector<S>& n,
                std::vector<S>& hn_lin, std::vector<S>& h_next) const {
    const int H = cfg_.gru_hidden, E = cfg_.embed_dim;
    Eigen::Matrix<S, Eigen::Dynamic, 1> gi =
        MatMap<S>(w_ih.data(), 3 * H, E) * VecMap<S>(x.data(), E) +
        VecMap<S>(b_ih.data(), 3 * H);
    Eigen::Matrix<S, Eigen::Dynamic, 1> gh =
        MatMap<S>(w_hh.data(), 3 * H, H) * VecMap<S>(h_prev.data(), H) +
        VecMap<S>(b_hh.data(), 3 * H);
    for (int i = 0; i < H; ++i) {
      r[i] = S(1) / (S(1) + std::exp(-(gi[i] + gh[i])));
      z[i] = S(1) / (S(1) + std::exp(-(gi[H + i] + gh[H + i])));
      hn_lin[i] = gh[2 * H + i];
      n[i] = std::tanh(gi[2 * H + i] + r[i] * hn_lin[i]);
      h_next[i] = (S(1) - z[i]) * n[i] + z[i] * h_prev[i];
    }
  }

  void backward(std::size_t frames, std::span<const std::array<S, 4>> d_logits,
                std::span<S> grads, Workspace<S>& ws) const {
    const int c = cfg_.channels, h = cfg_.rows, w = cfg_.cols;
    const int E = cfg_.embed_dim, hin = cfg_.head_in();

    auto g_conv1w = tensor_of(grads, layout_, "conv1.weight");
    auto g_conv1b = tensor_of(grads, layout_, "conv1.bias");
    auto g_conv2w = tensor_of(grads, layout_, "conv2.weight");
    auto g_conv2b = tensor_of(grads, layout_, "conv2.bias");
    auto g_embedw = tensor_of(grads, layout_, "embed.weight");
    auto g_embedb = tensor_of(grads, layout_, "embed.bias");
    auto g_headw = tensor_of(grads, layout_, "head.weight");
    auto g_headb = tensor_of(grads, layout_, "head.bias");

    MatMap<S> Wh(tensor("head.weight").data(), 4, hin);

    // head backward, collecting d(embedding) or d(hidden state) per frame
    std::vector<std::vector<S>> d_feed(frames, std::vector<S>(hin, S(0)));
    for (std::size_t t = 0; t < frames; ++t) {
      const S* in = cfg_.recurrent ? ws.h[t + 1].data() : ws.frames[t].embed.data();
      Eigen::Matrix<S, 4, 1> dy;
      for (int i = 0; i < 4; ++i) dy[i] = d_logits[t][i];
      MutMatMap<S>(g_headw.data(), 4, hin) += dy * VecMap<S>(in, hin).transpose();
      MutVecMap<S>(g_headb.data(), 4) += dy;
      MutVecMap<S>(d_feed[t].data(), hin) = Wh.transpose() * dy;
    }

    // BPTT through the GRU (d_feed becomes d_embed)
    std::vector<std::vector<S>> d_embed(frames, std::vector<S>(E, S(0)));
    if (cfg_.recurrent) {
      const int H = cfg_.gru_hidden;
      const auto w_ih = tensor("gru.w_ih");
      const auto w_hh = tensor("gru.w_hh");
      auto g_wih = tensor_of(grads, layout_, "gru.w_ih");
      auto g_whh = tensor_of(grads, layout_, "gru.w_hh");
      auto g_bih = tensor_of(grads, layout_, "gru.b_ih");
      auto g_bhh = tensor_of(grads, layout_, "gru.b_hh");
      MatMap<S> Wih(w_ih.data(), 3 * H, E);
      MatMap<S> Whh(w_hh.data(), 3 * H, H);

      std::vector<S> dh(H, S(0));
      Eigen::Matrix<S, Eigen::Dynamic, 1> dpre_i(3 * H), dpre_h(3 * H);
      for (std::size_t t = frames; t-- > 0;) {
        for (int i = 0; i < H; ++i) dh[i] += d_feed[t][i];
        const auto& r = ws.r[t];
        const auto& z = ws.z[t];
        const auto& n = ws.n[t];
        const auto& hn = ws.hn_lin[t];
        const auto& h_prev = ws.h[t];
        std::vector<S> dh_prev(H, S(0));
        for (int i = 0; i < H; ++i) {
          const S dz = dh[i] * (h_prev[i] - n[i]);
          const S dn = dh[i] * (S(1) - z[i]);
          dh_prev[i] = dh[i] * z[i];
          const S dn_pre = dn * (S(1) - n[i] * n[i]);
          const S dr = dn_pre * hn[i];
          const S dhn_lin = dn_pre * r[i];
          const S dz_pre = dz * z[i] * (S(1) - z[i]);
          const S dr_pre = dr * r[i] * (S(1) - r[i]);
          dpre_i[i] = dr_pre;
          dpre_i[H + i] = dz_pre;
          dpre_i[2 * H + i] = dn_pre;
          dpre_h[i] = dr_pre;
          dpre_h[H + i] = dz_pre;
          dpre_h[2 * H + i] = dhn_lin;
        }
        MutMatMap<S>(g_wih.data(), 3 * H, E) +=
            dpre_i * VecMap<S>(ws.frames[t].embed.data(), E).transpose();
        MutMatMap<S>(g_whh.data(), 3 * H, H) +=
            dpre_h * VecMap<S>(h_prev.data(), H).transpose();
        MutVecMap<S>(g_bih.data(), 3 * H) += dpre_i;
        MutVecMap<S>(g_bhh.data(), 3 * H) += dpre_h;
        MutVecMap<S>(d_embed[t].data(), E) = Wih.transpose() * dpre_i;
        MutVecMap<S>(dh.data(), H) =
            (Whh.transpose() * dpre_h + VecMap<S>(dh_prev.data(), H)).eval();
      }
    } else {
      d_embed = std::move(d_feed);
    }

    // shared tower backward per frame
    const int flat = cfg_.flat_dim();
    MatMap<S> We(tensor("embed.weight").data(), E, flat);
    ws.d_pool2 = Volume<S>(4 * c, h / 4, w / 4);
    ws.d_conv2 = Volume<S>(4 * c, h / 2, w / 2);
    ws.d_pool1 = Volume<S>(2 * c, h / 2, w / 2);
    ws.d_conv1 = Volume<S>(2 * c, h, w);
    for (std::size_t t = 0; t < frames; ++t) {
      auto& fa = ws.frames[t];
      // relu on the embedding
      for (int i = 0; i < E; ++i)
        if (fa.embed[i] <= S(0)) d_embed[t][i] = S(0);
      MutMatMap<S>(g_embedw.data(), E, flat) +=
          VecMap<S>(d_embed[t].data(), E) *
          VecMap<S>(fa.pool2.v.data(), flat).transpose();
      MutVecMap<S>(g_embedb.data(), E) += VecMap<S>(d_embed[t].data(), E);
      MutVecMap<S>(ws.d_pool2.v.data(), flat) =
          We.transpose() * VecMap<S>(d_embed[t].data(), E);

      maxpool2x2_backward(ws.d_pool2, fa.arg2, ws.d_conv2);
      relu_backward(fa.conv2, ws.d_conv2);
      conv3x3_backward(fa.pool1, tensor("conv2.weight"), ws.d_conv2, &ws.d_pool1,
                       g_conv2w, g_conv2b);

      maxpool2x2_backward(ws.d_pool1, fa.arg1, ws.d_conv1);
      relu_backward(fa.conv1, ws.d_conv1);
      // gradients stop at the feature provider and the density map
      conv3x3_backward(fa.weighted, tensor("conv1.weight"), ws.d_conv1, nullptr,
                       g_conv1w, g_conv1b);
    }
  }

  NetConfig cfg_;
  ParamLayout layout_;
  std::vector<S> params_;
};

}  // namespace gazedec::nn
