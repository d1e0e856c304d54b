#pragma once

// Little-endian helpers for the compiled store images.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxgate/errors.hpp"

namespace fluxgate::detail {

static_assert(std::endian::native == std::endian::little, "compiled images assume little-endian");

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_array(std::span<const T> values) {
    put<std::uint64_t>(values.size());
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }
  void put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  template <typename T>
  std::vector<T> get_array() {
    const auto n = get<std::uint64_t>();
    if (n > bytes_.size() / sizeof(T)) corrupt();
    std::vector<T> out(static_cast<std::size_t>(n));
    std::memcpy(out.data(), take(out.size() * sizeof(T)), out.size() * sizeof(T));
    return out;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  [[noreturn]] static void corrupt() { throw Error(ErrorCode::CorruptModel, "truncated store image"); }
  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) corrupt();
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

/// Frames a payload as magic + CRC-32 trailer.
inline std::vector<std::uint8_t> seal(std::string_view magic, ByteWriter& body) {
  ByteWriter out;
  out.put_bytes(magic);
  auto& payload = body.bytes();
  out.bytes().insert(out.bytes().end(), payload.begin(), payload.end());
  out.put<std::uint32_t>(crc32_of(payload));
  return std::move(out.bytes());
}

/// Verifies magic and checksum, returning the payload.
inline std::span<const std::uint8_t> unseal(std::string_view magic, std::span<const std::uint8_t> bytes) {
  if (bytes.size() < magic.size() + 4 ||
      std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    throw Error(ErrorCode::CorruptModel, "bad store image header");
  }
  const auto payload = bytes.subspan(magic.size(), bytes.size() - magic.size() - 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (stored != crc32_of(payload)) throw Error(ErrorCode::CorruptModel, "store image checksum mismatch");
  return payload;
}

inline bool has_magic(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  std::string head(magic.size(), '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head.size()))) return false;
  return head == magic;
}

}  // namespace fluxgate::detail
