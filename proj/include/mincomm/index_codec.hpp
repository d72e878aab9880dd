#pragma once

// Prefix-free codes for the transmitted codeword index K >= 1.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mincomm {

/// A sequence of bits, first bit first.
class BitString {
 public:
  BitString() = default;

  void push(bool bit) { bits_.push_back(bit); }
  /// Append the low `count` bits of `value`, most significant first.
  void push_bits(std::uint64_t value, unsigned count);
  void append(const BitString& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  std::string to_string() const;
  static BitString from_string(const std::string& text);

  /// u32 little-endian bit count, then the bits packed MSB-first.
  std::vector<std::uint8_t> serialize() const;
  static BitString deserialize(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

  bool operator==(const BitString&) const = default;

 private:
  std::vector<bool> bits_;
};

class BitReader {
 public:
  explicit BitReader(const BitString& bits) : bits_(bits) {}

  bool bit();
  std::uint64_t bits(unsigned count);
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ >= bits_.size(); }

 private:
  const BitString& bits_;
  std::size_t pos_ = 0;
};

struct IndexCode {
  enum class Kind { elias_delta, zipf };
  Kind kind = Kind::elias_delta;
  double zipf_exponent = 2.0;  // lambda_z > 1, zipf only

  static IndexCode elias_delta() { return {}; }
  static IndexCode zipf(double exponent);
  /// lambda_z = 1 + 1 / (c_hat + 1/e) for a pilot estimate c_hat of the mean KL.
  static IndexCode zipf_for_rate(double c_hat);

  /// Golomb parameter for the bucket index (zipf only).
  std::uint64_t golomb_parameter() const;
  std::string to_string() const;
};

void encode_index(std::uint64_t k, const IndexCode& code, BitString& out);
BitString encode_index(std::uint64_t k, const IndexCode& code);

/// Reads one codeword. Malformed or truncated input raises DecodeError.
std::uint64_t decode_index(BitReader& in, const IndexCode& code);
/// Decodes a single codeword that must span the whole string.
std::uint64_t decode_index(const BitString& bits, const IndexCode& code);

std::size_t code_length_bits(std::uint64_t k, const IndexCode& code);

/// C + ln(C + 1) + 4 nats. C < 0 raises ConfigError.
double comm_budget(double c);

}  // namespace mincomm
