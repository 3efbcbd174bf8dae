// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "gazedec/nn/loss.hpp"
#include "gazedec/nn/net.hpp"

namespace gazedec::nn {

struct GradCheckConfig {
  NetConfig net;
  LossKind loss = LossKind::L1;
  int window = 1;      // frames per batch window
  int batches = 10;    // independent random batches
  double step = 1e-4;  // central finite-difference step
  std::uint64_t seed = 7;
  /// Test hook: added to one analytic gradient entry before comparison, so
  /// the harness itself can be shown to catch a wrong gradient.
  double corruption = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t params_checked = 0;

  bool passed(double tolerance = 1e-4) const { return max_rel_err < tolerance; }
};

/// Compare every analytic parameter gradient against central finite
/// differences of the same window loss, on a float64 path. For the CIoU loss
/// the trade-off coefficient is frozen at its operating-point value on both
/// sides, since that is the function whose gradient the optimizer follows.
/// Relative error uses |a - f| / max(1, |a|, |f|).
GradCheckReport grad_check(const GradCheckConfig& cfg);

}  // namespace gazedec::nn
