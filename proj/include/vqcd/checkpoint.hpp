#pragma once

// Checkpoint container, version 1. All integers and reals little-endian.
//
//   magic      8 bytes  "VQCDCKPT"
//   version    u32      1
//   task_id    i64      -1 when not task-specific
//   step       u64      training step the snapshot was taken at
//   seed       u64      RNG seed of the run
//   extra_len  u32      followed by extra_len bytes of UTF-8 JSON (provenance)
//   count      u32      number of entries, sorted by name
//   entry:
//     name_len u32, name bytes
//     trainable u8
//     width    u8       bytes per real: 4 (binary32) or 8 (binary64)
//     rank     u32, dims u64[rank]
//     data     width * prod(dims) bytes

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "vqcd/param_store.hpp"

namespace vqcd {

struct CheckpointMeta {
  std::int64_t task_id = -1;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string extra;  // JSON text

  bool operator==(const CheckpointMeta&) const = default;
};

namespace detail {

inline constexpr std::array<char, 8> kCheckpointMagic{'V', 'Q', 'C', 'D', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& is, const std::string& path) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), sizeof(T))) throw IoError("truncated file: " + path);
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, const std::string& path) {
  const auto n = get_le<std::uint32_t>(is, path);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw IoError("truncated file: " + path);
  return s;
}

}  // namespace detail

template <class Real>
void save_checkpoint(const std::string& path, const ParameterStore<Real>& store,
                     const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(detail::kCheckpointMagic.data(), 8);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::int64_t>(os, meta.task_id);
  detail::put_le<std::uint64_t>(os, meta.step);
  detail::put_le<std::uint64_t>(os, meta.seed);
  detail::put_string(os, meta.extra);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, e] : store) {
    detail::put_string(os, name);
    detail::put_le<std::uint8_t>(os, e.trainable ? 1 : 0);
    detail::put_le<std::uint8_t>(os, sizeof(Real));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.tensor.shape.size()));
    for (auto d : e.tensor.shape) detail::put_le<std::uint64_t>(os, d);
    for (Real v : e.tensor.data) detail::put_le<Real>(os, v);
  }
  if (!os) throw IoError("write failed: " + path);
}

template <class Real>
ParameterStore<Real> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), 8) || magic != detail::kCheckpointMagic)
    throw IoError("not a checkpoint file: " + path);
  const auto version = detail::get_le<std::uint32_t>(is, path);
  if (version != 1) throw IoError("unsupported checkpoint version in " + path);
  CheckpointMeta m;
  m.task_id = detail::get_le<std::int64_t>(is, path);
  m.step = detail::get_le<std::uint64_t>(is, path);
  m.seed = detail::get_le<std::uint64_t>(is, path);
  m.extra = detail::get_string(is, path);
  const auto count = detail::get_le<std::uint32_t>(is, path);
  ParameterStore<Real> store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = detail::get_string(is, path);
    const bool trainable = detail::get_le<std::uint8_t>(is, path) != 0;
    const auto width = detail::get_le<std::uint8_t>(is, path);
    const auto rank = detail::get_le<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& d : shape) d = detail::get_le<std::uint64_t>(is, path);
    Tensor<Real> t(shape);
    for (auto& v : t.data) {
      if (width == 4) v = static_cast<Real>(detail::get_le<float>(is, path));
      else if (width == 8) v = static_cast<Real>(detail::get_le<double>(is, path));
      else throw IoError("bad real width in " + path);
    }
    store.add(name, std::move(t), trainable);
  }
  if (meta) *meta = std::move(m);
  return store;
}

}  // namespace vqcd
