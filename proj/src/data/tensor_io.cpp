#include "apm/data/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace apm::io {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor<float>& t) {
  out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
  for (float v : t.data()) put_f32(out, v);
}

void ByteReader::need(std::size_t n, const char* what) {
  if (bytes_.size() - offset_ < n) {
    throw FormatError(std::string("truncated input while reading ") + what, offset_);
  }
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
  offset_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
  offset_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string ByteReader::string() {
  const std::uint32_t n = u32();
  need(n, "string");
  std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), n);
  offset_ += n;
  return s;
}

void ByteReader::expect_magic(std::span<const char> magic, const char* what) {
  const std::size_t at = offset_;
  need(magic.size(), what);
  for (std::size_t i = 0; i < magic.size(); ++i) {
    if (bytes_[offset_ + i] != static_cast<std::uint8_t>(magic[i])) {
      throw FormatError(std::string("bad magic for ") + what, at);
    }
  }
  offset_ += magic.size();
}

Tensor<float> ByteReader::tensor() {
  expect_magic(kTensorMagic, "tensor blob");
  const std::size_t version_at = offset_;
  const std::uint32_t version = u32();
  if (version != kTensorVersion) {
    throw FormatError("unsupported tensor blob version " + std::to_string(version), version_at);
  }
  const std::size_t rank_at = offset_;
  const std::uint32_t rank = u32();
  if (rank == 0 || rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), rank_at);
  Shape shape(rank);
  std::size_t count = 1;
  for (auto& e : shape) {
    const std::size_t at = offset_;
    e = u32();
    if (e == 0) throw FormatError("zero tensor extent", at);
    count *= e;
  }
  need(count * 4, "tensor data");
  std::vector<float> data(count);
  for (auto& v : data) v = f32();
  return Tensor<float>(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", "short write to " + path);
}

void save_tensor(const std::string& path, const Tensor<float>& t) {
  std::vector<std::uint8_t> bytes;
  put_tensor(bytes, t);
  write_file(path, bytes);
}

Tensor<float> load_tensor(const std::string& path) {
  const auto bytes = read_file(path);
  ByteReader reader(bytes);
  Tensor<float> t = reader.tensor();
  if (!reader.done()) throw FormatError("trailing bytes after tensor", reader.offset());
  return t;
}

}  // namespace apm::io
