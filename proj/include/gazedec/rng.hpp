// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace gazedec {

/// Seedable random stream with named substream derivation.
///
/// All experiment randomness flows from one root seed; components draw from
/// substreams keyed by path-like names ("synth/video01/p02/gaze"), so any
/// part of a pipeline can be reproduced in isolation. Draw routines are
/// implemented here rather than with std:: distributions, which keeps the
/// byte stream identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root_seed) : RngStream(root_seed, "") {}

  /// Derive an independent stream; same (seed, path) always yields the
  /// same stream.
  RngStream substream(std::string_view name) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform index in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Exponential with the given mean (> 0).
  double exponential(double mean);

  /// Normal via Box-Muller; consumes two uniforms per call.
  double normal(double mu, double sigma);

  std::uint64_t root_seed() const { return root_seed_; }
  const std::string& path() const { return path_; }

 private:
  RngStream(std::uint64_t root_seed, std::string path);

  std::uint64_t root_seed_;
  std::string path_;
  std::mt19937_64 engine_;
};

}  // namespace gazedec
