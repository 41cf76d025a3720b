#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apm/core/tensor.hpp"

namespace apm::io {

/// Every tensor blob starts with this 8-byte magic, a u32 format version,
/// a u32 rank and `rank` u32 extents, followed by little-endian float32 data.
inline constexpr std::array<char, 8> kTensorMagic{'A', 'P', 'M', 'T', 'N', 'S', 'R', '\x1a'};
inline constexpr std::uint32_t kTensorVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_string(std::vector<std::uint8_t>& out, const std::string& s);
void put_tensor(std::vector<std::uint8_t>& out, const Tensor<float>& t);

/// Bounds-checked little-endian reader. Every failure reports the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string string();
  Tensor<float> tensor();
  void expect_magic(std::span<const char> magic, const char* what);

  std::size_t offset() const noexcept { return offset_; }
  bool done() const noexcept { return offset_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what);

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

/// Standalone tensor file (a single blob).
void save_tensor(const std::string& path, const Tensor<float>& t);
Tensor<float> load_tensor(const std::string& path);

}  // namespace apm::io
