// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gazedec/errors.hpp"

namespace gazedec::nn {

/// First/second-moment estimates with bias correction; weight decay enters
/// as an L2 term added to the gradient before the moment updates.
template <class S>
class Adam {
 public:
  Adam(std::size_t param_count, double lr, double weight_decay,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(param_count, S(0)), v_(param_count, S(0)) {
    if (lr <= 0.0 || weight_decay < 0.0)
      throw ConfigError("adam needs lr > 0 and weight_decay >= 0");
  }

  std::int64_t step_count() const { return step_; }

  void step(std::span<S> params, std::span<const S> grads) {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = static_cast<double>(grads[i]) + wd_ * static_cast<double>(params[i]);
      m_[i] = S(beta1_ * m_[i] + (1.0 - beta1_) * g);
      v_[i] = S(beta2_ * v_[i] + (1.0 - beta2_) * g * g);
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= S(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
  std::vector<S> m_, v_;
};

}  // namespace gazedec::nn
