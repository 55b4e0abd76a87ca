#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrk/model.hpp"

namespace ttrk {

class ModelIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len,
                           std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return ~crc;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline constexpr char kModelMagic[4] = {'T', 'T', 'R', 'K'};
inline constexpr std::uint32_t kModelVersion = 1;

// Format: magic "TTRK", u32 version, u32 header length, JSON header (config,
// vocab tokens, tensor manifest), then each tensor as little-endian f32 in
// manifest order, then a CRC32 of everything before it.
inline void save_model(const ModelParams<float>& model, const std::string& path) {
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kModelMagic, kModelMagic + 4);
  detail::put_u32(bytes, kModelVersion);

  nlohmann::json header;
  header["config"] = model.cfg;
  header["vocab"] = model.vocab.tokens();
  header["manifest"] = nlohmann::json::array();
  for (const auto& name : model.names) {
    header["manifest"].push_back(
        {{"name", name}, {"shape", model.tensors.at(name).shape}});
  }
  const std::string header_str = header.dump();
  detail::put_u32(bytes, static_cast<std::uint32_t>(header_str.size()));
  bytes.insert(bytes.end(), header_str.begin(), header_str.end());

  for (const auto& name : model.names) {
    for (float v : model.tensors.at(name).data) {
      std::uint32_t raw;
      std::memcpy(&raw, &v, 4);
      detail::put_u32(bytes, raw);
    }
  }
  detail::put_u32(bytes, detail::crc32(bytes.data(), bytes.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIoError("cannot open model file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelIoError("short write to model file: " + path);
}

inline ModelParams<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open model file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw ModelIoError("truncated model file: " + path);
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw ModelIoError("bad magic in model file: " + path);
  const std::uint32_t version = detail::get_u32(bytes.data() + 4);
  if (version != kModelVersion)
    throw ModelIoError("unsupported model format version " +
                       std::to_string(version) + " in " + path);

  const std::uint32_t stored_crc = detail::get_u32(bytes.data() + bytes.size() - 4);
  if (detail::crc32(bytes.data(), bytes.size() - 4) != stored_crc)
    throw ModelIoError("checksum failure in model file: " + path);

  const std::uint32_t header_len = detail::get_u32(bytes.data() + 8);
  std::size_t pos = 12;
  if (pos + header_len + 4 > bytes.size())
    throw ModelIoError("truncated model file: " + path);
  const nlohmann::json header = nlohmann::json::parse(
      bytes.begin() + static_cast<std::ptrdiff_t>(pos),
      bytes.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  pos += header_len;

  ModelParams<float> model;
  model.cfg = header.at("config").get<EncoderConfig>();
  model.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  for (const auto& entry : header.at("manifest")) {
    const std::string name = entry.at("name").get<std::string>();
    Tensor<float> t = Tensor<float>::zeros(entry.at("shape").get<std::vector<int>>());
    if (pos + t.size() * 4 + 4 > bytes.size())
      throw ModelIoError("truncated model file: " + path);
    for (auto& v : t.data) {
      const std::uint32_t raw = detail::get_u32(bytes.data() + pos);
      std::memcpy(&v, &raw, 4);
      pos += 4;
    }
    model.add(name, std::move(t));
  }
  if (pos + 4 != bytes.size())
    throw ModelIoError("trailing bytes in model file: " + path);
  return model;
}

}  // namespace ttrk
