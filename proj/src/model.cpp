// SPDX-License-Identifier: Apache-2.0
#include "gazedec/nn/loss.hpp"
#include "gazedec/nn/net.hpp"

namespace gazedec::nn {

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "l1") return LossKind::L1;
  if (s == "giou") return LossKind::GIOU;
  if (s == "ciou") return LossKind::CIOU;
  throw ConfigError("unknown loss '" + s + "' (expected l1, giou or ciou)");
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::L1:
      return "l1";
    case LossKind::GIOU:
      return "giou";
    case LossKind::CIOU:
      return "ciou";
  }
  return "l1";
}

// Anchor the templates once so unit tests link against identical code.
template class BoxDecoderNet<float>;
template class BoxDecoderNet<double>;

}  // namespace gazedec::nn
