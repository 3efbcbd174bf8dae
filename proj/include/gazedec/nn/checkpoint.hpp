// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "gazedec/nn/train.hpp"

namespace gazedec::nn {

/// Versioned binary container: magic "GZDC", u32 version, u64 JSON header
/// length, JSON header (architecture, training config echo, seed, class
/// vocabulary, epoch log), u64 parameter count, float32 little-endian
/// parameter values in layout order.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& file);
TrainedModel load_checkpoint(const std::filesystem::path& file);

}  // namespace gazedec::nn
