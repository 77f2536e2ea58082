#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "tpmtl/core/error.hpp"

namespace tpmtl::io {

template <typename T>
T byteswap(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

/// Appends values to `out` in little-endian byte order.
template <typename T>
void write_le(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) {
      const T s = byteswap(v);
      out.write(reinterpret_cast<const char*>(&s), sizeof(T));
    }
  }
}

template <typename T>
void read_le(std::istream& in, std::span<T> values) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) v = byteswap(v);
  }
}

template <typename T>
void write_file(const std::filesystem::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  write_le(out, values);
  if (!out) throw ValidationError("failed writing " + path.string());
}

/// Reads exactly `count` values; size mismatches raise CorruptionError
/// prefixed with `what`.
template <typename T>
std::vector<T> read_file(const std::filesystem::path& path, std::size_t count, const std::string& what) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw CorruptionError(what + ": cannot stat " + path.string());
  if (size != count * sizeof(T)) {
    throw CorruptionError(what + ": " + path.filename().string() + " holds " + std::to_string(size) +
                          " bytes, expected " + std::to_string(count * sizeof(T)));
  }
  std::ifstream in(path, std::ios::binary);
  std::vector<T> v(count);
  read_le(in, std::span<T>(v));
  if (!in) throw CorruptionError(what + ": short read from " + path.string());
  return v;
}

}  // namespace tpmtl::io
