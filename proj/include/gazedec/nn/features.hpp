// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gazedec/ingest.hpp"
#include "gazedec/nn/tensor.hpp"

namespace gazedec::nn {

/// Abstract per-frame feature-map source. Stands in for a frozen pretrained
/// backbone: any fixed map from frames to C x rows x cols tensors works.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual int channels() const = 0;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual Volume<float> frame_features(int frame_index) const = 0;
};

/// Desk-scale synthetic backbone: rasterizes the run's candidate detections
/// into per-class occupancy channels, plus two normalized coordinate
/// channels. Requires channels >= 3; class labels map onto the first
/// channels - 2 planes through the given vocabulary (modulo its size).
class SyntheticRasterizer : public FeatureProvider {
 public:
  SyntheticRasterizer(const Run& run, std::vector<std::string> vocabulary,
                      int channels, int rows, int cols);

  int channels() const override { return channels_; }
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  Volume<float> frame_features(int frame_index) const override;

 private:
  const Run* run_;
  std::unordered_map<int, const FrameRecord*> by_frame;
  std::unordered_map<std::string, int> class_channel_;
  int channels_, rows_, cols_;
};

/// Sorted distinct class labels across every run's detections; gives the
/// rasterizer a stable channel mapping independent of split choices.
std::vector<std::string> build_vocabulary(const Dataset& ds);

/// Loads per-frame feature files (see write_feature_file for the layout)
/// named frame_<index>.feat in one directory.
class FeatureFileLoader : public FeatureProvider {
 public:
  explicit FeatureFileLoader(std::filesystem::path dir);

  int channels() const override { return channels_; }
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  Volume<float> frame_features(int frame_index) const override;

 private:
  std::filesystem::path dir_;
  int channels_ = 0, rows_ = 0, cols_ = 0;
};

/// Flat little-endian binary: magic "GZDF", u32 version, u32 frame index,
/// u32 channels, u32 rows, u32 cols, u32 dtype (0 = float32), then
/// channels * rows * cols float32 values.
void write_feature_file(const std::filesystem::path& file, int frame_index,
                        const Volume<float>& features);
Volume<float> read_feature_file(const std::filesystem::path& file,
                                int* frame_index = nullptr);

}  // namespace gazedec::nn
