#pragma once

// Binary file formats. All integers and doubles little-endian.
//
//   dataset: "RCDS" | u32 version=1 | u32 n | u32 d | n x (d x f64, u8 label)
//   model:   "RCMW" | u32 version=1 | u32 d | d x f64

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mincomm/hypothesis.hpp"

namespace mincomm {

// Little-endian primitives shared by the binary formats and the wire message.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);

/// Bounds-checked little-endian reader over a byte buffer.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::span<const std::uint8_t> take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_dataset(const Dataset& s);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const std::filesystem::path& path, const Dataset& s);
Dataset read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_model(const Hypothesis& w);
Hypothesis decode_model(std::span<const std::uint8_t> bytes);
void write_model(const std::filesystem::path& path, const Hypothesis& w);
Hypothesis read_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mincomm
