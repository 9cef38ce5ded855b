#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ifr/model/engine.hpp"

namespace ifr {

// Checkpoint layout: magic "IFR1", u32 version, config snapshot text, then
// named parameter blobs as 32-bit little-endian floats. The float production
// model round-trips bit-exactly; wider scalar types pass through float32.

namespace ckpt_detail {

inline void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

inline void put_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}

inline float get_f32(const unsigned char* b) {
  uint32_t u = uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

constexpr uint32_t kVersion = 1;

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const IfrModel<T>& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write("IFR1", 4);
  ckpt_detail::put_u32(f, ckpt_detail::kVersion);

  KvConfig kv;
  model.cfg.to_kv(kv);
  std::string cfg_text = kv.serialize();
  ckpt_detail::put_u32(f, static_cast<uint32_t>(cfg_text.size()));
  f.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

  const auto& params = model.params.all();
  ckpt_detail::put_u32(f, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    ckpt_detail::put_u32(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    ckpt_detail::put_u32(f, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) ckpt_detail::put_u32(f, static_cast<uint32_t>(d));
    for (T v : t.val()) ckpt_detail::put_f32(f, static_cast<float>(v));
  }
  f.close();
  if (!f) throw std::runtime_error("write failed for checkpoint: " + path);
}

template <typename T>
IfrModel<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "IFR1", 4) != 0)
    throw std::runtime_error("unsupported checkpoint format (bad magic): " + path);
  uint32_t version = ckpt_detail::get_u32(f);
  if (version != ckpt_detail::kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " + path);

  uint32_t cfg_len = ckpt_detail::get_u32(f);
  std::string cfg_text(cfg_len, '\0');
  f.read(cfg_text.data(), cfg_len);
  if (!f) throw std::runtime_error("checkpoint truncated: " + path);
  EngineConfig cfg = EngineConfig::from_kv(KvConfig::parse(cfg_text));

  IfrModel<T> model(cfg);
  uint32_t n_params = ckpt_detail::get_u32(f);
  if (n_params != model.params.count())
    throw std::runtime_error("checkpoint parameter count mismatch: " + path);
  for (uint32_t i = 0; i < n_params; ++i) {
    uint32_t name_len = ckpt_detail::get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t rank = ckpt_detail::get_u32(f);
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(ckpt_detail::get_u32(f));
    nn::Tensor<T>* param = model.params.find(name);
    if (!param) throw std::runtime_error("checkpoint names unknown parameter '" + name + "': " + path);
    if (param->shape() != dims)
      throw std::runtime_error("checkpoint shape mismatch for parameter '" + name + "': " + path);
    std::vector<unsigned char> raw(param->numel() * 4);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw std::runtime_error("checkpoint truncated: " + path);
    auto& val = param->val();
    for (size_t j = 0; j < val.size(); ++j) val[j] = static_cast<T>(ckpt_detail::get_f32(&raw[j * 4]));
  }
  return model;
}

}  // namespace ifr
