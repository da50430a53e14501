#pragma once

// Checkpoint format: fixed header, named tensor manifest, then flat
// little-endian payloads in manifest order.
//
//   magic "TGACKPT\n" | u32 version | u8 precision (4 or 8) | u64 rng seed
//   u32 tensor count | per tensor: u32 name_len, name bytes, u32 rows, u32 cols
//   payloads: rows*cols scalars per tensor, little-endian

#include <cstdio>
#include <cstring>
#include <fstream>

#include "tga/params.hpp"

namespace tga {

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'T', 'G', 'A', 'C', 'K', 'P', 'T', '\n'};
inline constexpr uint32_t kVersion = 1;

template <typename U>
void write_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U read_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  is.read(reinterpret_cast<char*>(buf), sizeof(U));
  U v = 0;
  for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline void write_scalar(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_le<uint32_t>(os, bits);
}
inline void write_scalar(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_le<uint64_t>(os, bits);
}
inline void read_scalar(std::istream& is, float& v) {
  uint32_t bits = read_le<uint32_t>(is);
  std::memcpy(&v, &bits, 4);
}
inline void read_scalar(std::istream& is, double& v) {
  uint64_t bits = read_le<uint64_t>(is);
  std::memcpy(&v, &bits, 8);
}

}  // namespace ckpt_detail

template <typename T>
void ParameterStore<T>::save(const std::string& path) const {
  namespace d = ckpt_detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
  os.write(d::kMagic, 8);
  d::write_le<uint32_t>(os, d::kVersion);
  os.put(static_cast<char>(sizeof(T)));
  d::write_le<uint64_t>(os, seed_);
  d::write_le<uint32_t>(os, static_cast<uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    d::write_le<uint32_t>(os, static_cast<uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    d::write_le<uint32_t>(os, static_cast<uint32_t>(e.value.rows));
    d::write_le<uint32_t>(os, static_cast<uint32_t>(e.value.cols));
  }
  for (const auto& e : entries_)
    for (T v : e.value.a) d::write_scalar(os, v);
  if (!os) throw CheckpointError("write failed: " + path);
}

template <typename T>
void ParameterStore<T>::load(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, d::kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const uint32_t version = d::read_le<uint32_t>(is);
  if (version != d::kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const int precision = is.get();
  if (precision != static_cast<int>(sizeof(T)))
    throw CheckpointError("checkpoint precision is " + std::to_string(precision * 8) +
                          "-bit, store expects " + std::to_string(sizeof(T) * 8) + "-bit");
  seed_ = d::read_le<uint64_t>(is);
  const uint32_t count = d::read_le<uint32_t>(is);
  if (count != entries_.size())
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, model has " +
                          std::to_string(entries_.size()));
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = d::read_le<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t rows = d::read_le<uint32_t>(is);
    const uint32_t cols = d::read_le<uint32_t>(is);
    const auto& e = entries_[i];
    if (name != e.name)
      throw CheckpointError("manifest mismatch at tensor " + std::to_string(i) + ": checkpoint '" +
                            name + "' vs model '" + e.name + "'");
    if (rows != static_cast<uint32_t>(e.value.rows) || cols != static_cast<uint32_t>(e.value.cols))
      throw CheckpointError("shape mismatch for '" + name + "': checkpoint " +
                            shape_str(rows, cols) + " vs model " +
                            shape_str(e.value.rows, e.value.cols));
  }
  for (auto& e : entries_)
    for (T& v : e.value.a) d::read_scalar(is, v);
  if (!is) throw CheckpointError("truncated checkpoint: " + path);
}

}  // namespace tga
