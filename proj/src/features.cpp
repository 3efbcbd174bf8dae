// SPDX-License-Identifier: Apache-2.0
#include "gazedec/nn/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "gazedec/errors.hpp"

namespace gazedec::nn {

SyntheticRasterizer::SyntheticRasterizer(const Run& run,
                                         std::vector<std::string> vocabulary,
                                         int channels, int rows, int cols)
    : run_(&run), channels_(channels), rows_(rows), cols_(cols) {
  if (channels < 3)
    throw ConfigError("synthetic rasterizer needs at least 3 channels");
  if (vocabulary.empty())
    throw ConfigError("synthetic rasterizer needs a class vocabulary");
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    class_channel_[vocabulary[i]] = static_cast<int>(i % (channels - 2));
  for (const auto& r : run.records) by_frame[r.frame_index] = &r;
}

Volume<float> SyntheticRasterizer::frame_features(int frame_index) const {
  Volume<float> f(channels_, rows_, cols_);
  const double sx = cols_ / run_->meta.width;
  const double sy = rows_ / run_->meta.height;

  if (auto it = by_frame.find(frame_index); it != by_frame.end()) {
    for (const auto& det : it->second->detections) {
      const auto ch_it = class_channel_.find(det.class_label);
      if (ch_it == class_channel_.end()) continue;  // off-vocabulary class
      const int x0 = std::clamp(static_cast<int>(std::floor(det.box.x_min * sx)), 0, cols_ - 1);
      const int x1 = std::clamp(static_cast<int>(std::ceil(det.box.x_max * sx)), x0 + 1, cols_);
      const int y0 = std::clamp(static_cast<int>(std::floor(det.box.y_min * sy)), 0, rows_ - 1);
      const int y1 = std::clamp(static_cast<int>(std::ceil(det.box.y_max * sy)), y0 + 1, rows_);
      float* plane = f.plane(ch_it->second);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) plane[static_cast<std::size_t>(y) * cols_ + x] = 1.0f;
    }
  }

  float* xs = f.plane(channels_ - 2);
  float* ys = f.plane(channels_ - 1);
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * cols_ + x;
      xs[i] = static_cast<float>((x + 0.5) / cols_);
      ys[i] = static_cast<float>((y + 0.5) / rows_);
    }
  return f;
}

std::vector<std::string> build_vocabulary(const Dataset& ds) {
  std::set<std::string> classes;
  for (const auto& run : ds.runs)
    for (const auto& r : run.records)
      for (const auto& d : r.detections) classes.insert(d.class_label);
  return {classes.begin(), classes.end()};
}

// ---- Binary feature files ---------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'Z', 'D', 'F'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

std::filesystem::path frame_file(const std::filesystem::path& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06d.feat", frame);
  return dir / name;
}

}  // namespace

void write_feature_file(const std::filesystem::path& file, int frame_index,
                        const Volume<float>& features) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write feature file " + file.string());
  out.write(kMagic, 4);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(frame_index));
  put_u32(out, static_cast<std::uint32_t>(features.c));
  put_u32(out, static_cast<std::uint32_t>(features.h));
  put_u32(out, static_cast<std::uint32_t>(features.w));
  put_u32(out, 0);  // dtype float32
  static_assert(sizeof(float) == 4);
  // values are stored little-endian; this writer targets LE hosts
  out.write(reinterpret_cast<const char*>(features.v.data()),
            static_cast<std::streamsize>(features.v.size() * 4));
}

Volume<float> read_feature_file(const std::filesystem::path& file,
                                int* frame_index) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConsistencyError("cannot open feature file " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(file.string() + ": not a feature file");
  const std::uint32_t version = get_u32(in);
  if (version != 1)
    throw FormatError(file.string() + ": unsupported feature file version");
  const std::uint32_t frame = get_u32(in);
  const std::uint32_t c = get_u32(in);
  const std::uint32_t h = get_u32(in);
  const std::uint32_t w = get_u32(in);
  const std::uint32_t dtype = get_u32(in);
  if (dtype != 0) throw FormatError(file.string() + ": unsupported dtype");
  if (frame_index) *frame_index = static_cast<int>(frame);
  Volume<float> f(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  in.read(reinterpret_cast<char*>(f.v.data()),
          static_cast<std::streamsize>(f.v.size() * 4));
  if (!in) throw FormatError(file.string() + ": truncated payload");
  return f;
}

FeatureFileLoader::FeatureFileLoader(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  // Probe any file to learn the dimensions.
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.path().extension() != ".feat") continue;
    const Volume<float> f = read_feature_file(e.path());
    channels_ = f.c;
    rows_ = f.h;
    cols_ = f.w;
    return;
  }
  throw ConsistencyError("no .feat files in " + dir_.string());
}

Volume<float> FeatureFileLoader::frame_features(int frame_index) const {
  int stored = -1;
  Volume<float> f = read_feature_file(frame_file(dir_, frame_index), &stored);
  if (stored != frame_index)
    throw ConsistencyError("feature file frame index mismatch in " + dir_.string());
  if (f.c != channels_ || f.h != rows_ || f.w != cols_)
    throw ConsistencyError("feature file dimensions vary in " + dir_.string());
  return f;
}

}  // namespace gazedec::nn
