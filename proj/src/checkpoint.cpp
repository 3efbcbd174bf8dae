// SPDX-License-Identifier: Apache-2.0
#include "gazedec/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gazedec/errors.hpp"

namespace gazedec::nn {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'G', 'Z', 'D', 'C'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | hi << 32;
}

json header_json(const TrainedModel& m) {
  json j;
  j["net"] = {{"channels", m.net.channels},     {"rows", m.net.rows},
              {"cols", m.net.cols},             {"embed_dim", m.net.embed_dim},
              {"gru_hidden", m.net.gru_hidden}, {"recurrent", m.net.recurrent}};
  j["train"] = {{"learning_rate", m.train.learning_rate},
                {"weight_decay", m.train.weight_decay},
                {"epochs", m.train.epochs},
                {"loss", to_string(m.train.loss)},
                {"window", m.train.window},
                {"sigma_px", m.train.sigma_px},
                {"gdm_variant",
                 m.train.gdm_variant == GdmVariant::AVERAGED ? "averaged" : "normalized"},
                {"val_fraction", m.train.val_fraction}};
  j["seed"] = m.seed;
  j["vocabulary"] = m.vocabulary;
  j["log"] = json::array();
  for (const auto& row : m.log)
    j["log"].push_back({{"epoch", row.epoch},
                        {"train_loss", row.train_loss},
                        {"val_loss", row.val_loss},
                        {"val_mean_iou", row.val_mean_iou}});
  return j;
}

void parse_header(const json& j, TrainedModel& m) {
  const auto& n = j.at("net");
  m.net.channels = n.at("channels");
  m.net.rows = n.at("rows");
  m.net.cols = n.at("cols");
  m.net.embed_dim = n.at("embed_dim");
  m.net.gru_hidden = n.at("gru_hidden");
  m.net.recurrent = n.at("recurrent");
  const auto& t = j.at("train");
  m.train.learning_rate = t.at("learning_rate");
  m.train.weight_decay = t.at("weight_decay");
  m.train.epochs = t.at("epochs");
  m.train.loss = loss_kind_from_string(t.at("loss"));
  m.train.window = t.at("window");
  m.train.sigma_px = t.at("sigma_px");
  m.train.gdm_variant = t.at("gdm_variant") == "averaged" ? GdmVariant::AVERAGED
                                                          : GdmVariant::NORMALIZED;
  m.train.val_fraction = t.at("val_fraction");
  m.seed = j.at("seed");
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  for (const auto& row : j.value("log", json::array()))
    m.log.push_back({row.at("epoch"), row.at("train_loss"), row.at("val_loss"),
                     row.at("val_mean_iou")});
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& file) {
  const std::string header = header_json(model).dump();
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write checkpoint " + file.string());
  out.write(kMagic, 4);
  put_u32(out, 1);
  put_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u64(out, model.params.size());
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(model.params.data()),
            static_cast<std::streamsize>(model.params.size() * 4));
}

TrainedModel load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConsistencyError("cannot open checkpoint " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(file.string() + ": not a checkpoint file");
  if (get_u32(in) != 1)
    throw FormatError(file.string() + ": unsupported checkpoint version");
  const std::uint64_t header_len = get_u64(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  TrainedModel m;
  try {
    parse_header(nlohmann::json::parse(header), m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file.string() + ": bad checkpoint header: " + e.what());
  }
  const std::uint64_t count = get_u64(in);
  const std::size_t expected = make_layout(m.net).total;
  if (count != expected)
    throw FormatError(file.string() + ": parameter count mismatch");
  m.params.resize(count);
  in.read(reinterpret_cast<char*>(m.params.data()),
          static_cast<std::streamsize>(count * 4));
  if (!in) throw FormatError(file.string() + ": truncated checkpoint");
  return m;
}

}  // namespace gazedec::nn
