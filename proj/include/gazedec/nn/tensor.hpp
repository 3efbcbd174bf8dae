// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace gazedec::nn {

/// Dense C x H x W value block, channel-major row-major.
template <class S>
struct Volume {
  int c = 0, h = 0, w = 0;
  std::vector<S> v;

  Volume() = default;
  Volume(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

  std::size_t size() const { return v.size(); }
  S* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
  const S* plane(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * h * w;
  }
  S& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  S at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  void zero() { std::fill(v.begin(), v.end(), S(0)); }
};

}  // namespace gazedec::nn
