// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>

namespace stepwidth {

namespace {

using nlohmann::json;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json config_to_json(const DenoiserConfig& c) {
  json widths = json::array();
  for (WidthRatio w : c.allowed_widths) widths.push_back(w.eighths);
  return {{"data_dim", c.data_dim},
          {"hidden_width", c.hidden_width},
          {"depth", c.depth},
          {"time_embed_dim", c.time_embed_dim},
          {"allowed_widths", widths}};
}

DenoiserConfig config_from_json(const json& j) {
  DenoiserConfig c;
  c.data_dim = j.at("data_dim").get<std::size_t>();
  c.hidden_width = j.at("hidden_width").get<std::size_t>();
  c.depth = j.at("depth").get<std::size_t>();
  c.time_embed_dim = j.at("time_embed_dim").get<std::size_t>();
  c.allowed_widths.clear();
  for (const auto& w : j.at("allowed_widths")) c.allowed_widths.push_back(WidthRatio::checked(w.get<int>()));
  c.validate();
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.net.validate();
  const auto names = ckpt.net.array_names();
  json arrays = json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    arrays.push_back({{"name", names[i]}, {"offset", offset}, {"shape", ckpt.net.tensors[i].shape()}});
    offset += 8 * ckpt.net.tensors[i].size();
  }
  const json manifest = {
      {"format_version", kCheckpointVersion},
      {"config", config_to_json(ckpt.net.config)},
      {"schedule",
       {{"steps", ckpt.schedule.steps}, {"beta_start", ckpt.schedule.beta_start}, {"beta_end", ckpt.schedule.beta_end}}},
      {"training",
       {{"seed", ckpt.meta.train_seed},
        {"iterations", ckpt.meta.iterations},
        {"dataset", {{"kind", ckpt.meta.dataset}, {"size", ckpt.meta.dataset_size}, {"seed", ckpt.meta.dataset_seed}}}}},
      {"arrays", arrays}};
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + offset + 4);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor& t : ckpt.net.tensors)
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  const std::uint32_t crc = crc_of(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw CheckpointError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (crc_of(bytes.data(), body) != stored) throw CheckpointError("checkpoint checksum mismatch (file corrupted or truncated)");

  const std::uint64_t manifest_len = get_u64(bytes.data());
  if (manifest_len > body - 8) throw CheckpointError("checkpoint manifest length exceeds file size");
  json manifest;
  try {
    manifest = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    Checkpoint ckpt;
    ckpt.net.config = config_from_json(manifest.at("config"));
    const json& s = manifest.at("schedule");
    ckpt.schedule = {s.at("steps").get<int>(), s.at("beta_start").get<double>(), s.at("beta_end").get<double>()};
    const json& tr = manifest.at("training");
    ckpt.meta.train_seed = tr.at("seed").get<std::uint64_t>();
    ckpt.meta.iterations = tr.at("iterations").get<int>();
    ckpt.meta.dataset = tr.at("dataset").at("kind").get<std::string>();
    ckpt.meta.dataset_size = tr.at("dataset").at("size").get<std::size_t>();
    ckpt.meta.dataset_seed = tr.at("dataset").at("seed").get<std::uint64_t>();

    const std::uint8_t* payload = bytes.data() + 8 + manifest_len;
    const std::uint64_t payload_len = body - 8 - manifest_len;
    const auto names = ckpt.net.array_names();
    const auto shapes = ckpt.net.expected_shapes();
    std::vector<Tensor> tensors(names.size());
    std::vector<bool> filled(names.size(), false);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    for (const auto& entry : manifest.at("arrays")) {
      const std::string name = entry.at("name").get<std::string>();
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw CheckpointError("checkpoint has unexpected array '" + name + "'");
      const std::size_t idx = static_cast<std::size_t>(it - names.begin());
      if (filled[idx]) throw CheckpointError("checkpoint lists array '" + name + "' twice");
      const Shape shape = entry.at("shape").get<Shape>();
      if (shape != shapes[idx])
        throw CheckpointError("array '" + name + "' has shape " + shape_to_string(shape) + ", config expects " +
                              shape_to_string(shapes[idx]));
      const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
      const std::uint64_t len = 8 * shape_numel(shape);
      if (offset % 8 != 0 || offset > payload_len || len > payload_len - offset)
        throw CheckpointError("array '" + name + "' lies outside the payload");
      spans.emplace_back(offset, offset + len);
      std::vector<double> data(shape_numel(shape));
      for (std::size_t k = 0; k < data.size(); ++k) data[k] = std::bit_cast<double>(get_u64(payload + offset + 8 * k));
      tensors[idx] = Tensor(shape, std::move(data));
      filled[idx] = true;
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!filled[i]) throw CheckpointError("checkpoint is missing array '" + names[i] + "'");
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
      if (spans[i].first < spans[i - 1].second) throw CheckpointError("checkpoint arrays overlap");
    ckpt.net.tensors = std::move(tensors);
    ckpt.schedule.build();
    return ckpt;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest is malformed: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint manifest is invalid: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace stepwidth
