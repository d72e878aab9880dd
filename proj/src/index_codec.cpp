#include "mincomm/index_codec.hpp"

#include <bit>
#include <cmath>

#include "mincomm/error.hpp"
#include "mincomm/io.hpp"

namespace mincomm {

namespace {

constexpr unsigned kMaxBucket = 63;

unsigned floor_log2(std::uint64_t v) { return 63U - static_cast<unsigned>(std::countl_zero(v)); }

unsigned ceil_log2(std::uint64_t v) { return v <= 1 ? 0U : floor_log2(v - 1) + 1U; }

void golomb_encode(std::uint64_t value, std::uint64_t m, BitString& out) {
  const std::uint64_t quotient = value / m;
  const std::uint64_t remainder = value % m;
  for (std::uint64_t i = 0; i < quotient; ++i) out.push(true);
  out.push(false);
  const unsigned k = ceil_log2(m);
  if (k == 0) return;
  const std::uint64_t cutoff = (std::uint64_t{1} << k) - m;
  if (remainder < cutoff) {
    out.push_bits(remainder, k - 1);
  } else {
    out.push_bits(remainder + cutoff, k);
  }
}

std::uint64_t golomb_decode(BitReader& in, std::uint64_t m, std::uint64_t limit) {
  std::uint64_t quotient = 0;
  while (in.bit()) {
    ++quotient;
    if (quotient > limit / m) throw DecodeError("Golomb quotient out of range");
  }
  const unsigned k = ceil_log2(m);
  std::uint64_t remainder = 0;
  if (k > 0) {
    const std::uint64_t cutoff = (std::uint64_t{1} << k) - m;
    remainder = k > 1 ? in.bits(k - 1) : 0;
    if (remainder >= cutoff) remainder = ((remainder << 1) | (in.bit() ? 1U : 0U)) - cutoff;
  }
  return quotient * m + remainder;
}

}  // namespace

void BitString::push_bits(std::uint64_t value, unsigned count) {
  for (unsigned i = count; i > 0; --i) bits_.push_back(((value >> (i - 1)) & 1U) != 0);
}

std::string BitString::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

BitString BitString::from_string(const std::string& text) {
  BitString out;
  for (char c : text) {
    if (c != '0' && c != '1') throw ConfigError("bit strings contain only 0 and 1");
    out.push(c == '1');
  }
  return out;
}

std::vector<std::uint8_t> BitString::serialize() const {
  if (bits_.size() > 0xffffffffULL) throw ConfigError("bit string too long to serialize");
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(bits_.size()));
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    acc = static_cast<std::uint8_t>((acc << 1) | (bits_[i] ? 1U : 0U));
    if (i % 8 == 7) {
      out.push_back(acc);
      acc = 0;
    }
  }
  if (bits_.size() % 8 != 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - bits_.size() % 8)));
  return out;
}

BitString BitString::deserialize(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  ByteReader in(bytes);
  const std::uint32_t count = in.u32();
  const std::size_t n_bytes = (static_cast<std::size_t>(count) + 7) / 8;
  auto body = in.take(n_bytes);
  BitString out;
  for (std::uint32_t i = 0; i < count; ++i) out.push(((body[i / 8] >> (7 - i % 8)) & 1U) != 0);
  if (consumed) *consumed = 4 + n_bytes;
  return out;
}

bool BitReader::bit() {
  if (pos_ >= bits_.size()) throw DecodeError("unexpected end of bit string");
  return bits_[pos_++];
}

std::uint64_t BitReader::bits(unsigned count) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < count; ++i) v = (v << 1) | (bit() ? 1U : 0U);
  return v;
}

IndexCode IndexCode::zipf(double exponent) {
  if (!(exponent > 1.0) || !std::isfinite(exponent)) throw ConfigError("zipf exponent must be > 1");
  return {Kind::zipf, exponent};
}

IndexCode IndexCode::zipf_for_rate(double c_hat) {
  if (!(c_hat >= 0.0)) throw ConfigError("rate estimate must be non-negative");
  return zipf(1.0 + 1.0 / (c_hat + std::exp(-1.0)));
}

std::uint64_t IndexCode::golomb_parameter() const {
  // Bucket b = floor(log2 K) has mass roughly proportional to q^b with
  // q = 2^(1 - lambda); Golomb's optimal parameter for that geometric law.
  const double q = std::exp2(1.0 - zipf_exponent);
  const double m = std::ceil(-std::log1p(q) / std::log(q));
  if (!(m >= 1.0)) return 1;
  return m > 64.0 ? 64 : static_cast<std::uint64_t>(m);
}

std::string IndexCode::to_string() const {
  if (kind == Kind::elias_delta) return "elias_delta";
  return "zipf(" + std::to_string(zipf_exponent) + ")";
}

void encode_index(std::uint64_t k, const IndexCode& code, BitString& out) {
  if (k == 0) throw ConfigError("indices start at 1");
  const unsigned bucket = floor_log2(k);
  if (code.kind == IndexCode::Kind::elias_delta) {
    const unsigned n = bucket + 1;
    const unsigned len = floor_log2(n);
    for (unsigned i = 0; i < len; ++i) out.push(false);
    out.push_bits(n, len + 1);
    out.push_bits(k, bucket);
    return;
  }
  golomb_encode(bucket, code.golomb_parameter(), out);
  out.push_bits(k, bucket);
}

BitString encode_index(std::uint64_t k, const IndexCode& code) {
  BitString out;
  encode_index(k, code, out);
  return out;
}

std::uint64_t decode_index(BitReader& in, const IndexCode& code) {
  unsigned bucket = 0;
  if (code.kind == IndexCode::Kind::elias_delta) {
    unsigned len = 0;
    while (!in.bit()) {
      if (++len > 6) throw DecodeError("Elias delta length prefix too long");
    }
    const std::uint64_t n = (std::uint64_t{1} << len) | in.bits(len);
    if (n > 64) throw DecodeError("Elias delta value exceeds 64 bits");
    bucket = static_cast<unsigned>(n - 1);
  } else {
    const std::uint64_t b = golomb_decode(in, code.golomb_parameter(), kMaxBucket);
    if (b > kMaxBucket) throw DecodeError("zipf bucket out of range");
    bucket = static_cast<unsigned>(b);
  }
  return (std::uint64_t{1} << bucket) | in.bits(bucket);
}

std::uint64_t decode_index(const BitString& bits, const IndexCode& code) {
  BitReader in(bits);
  const std::uint64_t k = decode_index(in, code);
  if (!in.done()) throw DecodeError("trailing bits after index codeword");
  return k;
}

std::size_t code_length_bits(std::uint64_t k, const IndexCode& code) { return encode_index(k, code).size(); }

double comm_budget(double c) {
  if (!(c >= 0.0)) throw ConfigError("communication budget needs C >= 0");
  return c + std::log(c + 1.0) + 4.0;
}

}  // namespace mincomm
