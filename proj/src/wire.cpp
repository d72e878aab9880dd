#include "mincomm/wire.hpp"

#include "mincomm/error.hpp"
#include "mincomm/io.hpp"

namespace mincomm {

namespace {

enum : std::uint8_t { kModeNone = 0, kModeFull = 1, kModeQuantized = 2 };

}  // namespace

std::vector<std::uint8_t> encode_message(const WireMessage& msg, const IndexCode& code) {
  std::vector<std::uint8_t> out = encode_index(msg.index, code).serialize();
  const auto& p = msg.precision;
  switch (p.mode.kind) {
    case PrecisionMode::Kind::none:
      out.push_back(kModeNone);
      break;
    case PrecisionMode::Kind::full:
      out.push_back(kModeFull);
      for (double v : p.target) put_f64(out, v);
      break;
    case PrecisionMode::Kind::quantized: {
      out.push_back(kModeQuantized);
      out.push_back(static_cast<std::uint8_t>(p.mode.bits));
      put_f64(out, p.scale);
      BitString packed;
      for (auto c : p.codes) packed.push_bits(c, p.mode.bits);
      auto bytes = packed.serialize();
      out.insert(out.end(), bytes.begin() + 4, bytes.end());  // length implied by d and bits
      break;
    }
  }
  return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes, const IndexCode& code, std::size_t dim) {
  std::size_t used = 0;
  const BitString index_bits = BitString::deserialize(bytes, &used);
  WireMessage msg;
  msg.index = decode_index(index_bits, code);
  ByteReader in(bytes.subspan(used));
  const std::uint8_t mode = in.u8();
  switch (mode) {
    case kModeNone:
      msg.precision.mode = PrecisionMode::none();
      msg.precision.values.assign(dim, 0.0);
      break;
    case kModeFull: {
      msg.precision.mode = PrecisionMode::full();
      msg.precision.target.resize(dim);
      for (auto& v : msg.precision.target) v = in.f64();
      msg.precision.payload_bits = 64 * static_cast<std::uint64_t>(dim);
      break;
    }
    case kModeQuantized: {
      const unsigned bits = in.u8();
      if (bits == 0 || bits > 32) throw DecodeError("quantized payload with invalid bit width");
      const double scale = in.f64();
      const std::size_t total_bits = bits * dim;
      auto body = in.take((total_bits + 7) / 8);
      std::vector<std::uint32_t> codes(dim, 0);
      std::size_t pos = 0;
      for (auto& c : codes) {
        std::uint32_t v = 0;
        for (unsigned b = 0; b < bits; ++b, ++pos) v = (v << 1) | ((body[pos / 8] >> (7 - pos % 8)) & 1U);
        c = v;
      }
      msg.precision = dequantize(bits, std::move(codes), scale);
      break;
    }
    default:
      throw DecodeError("unknown precision mode byte");
  }
  if (in.remaining() != 0) throw DecodeError("trailing bytes after message");
  return msg;
}

std::size_t index_field_bits(std::uint64_t index, const IndexCode& code) { return code_length_bits(index, code); }

Receiver::Receiver(Prior prior, SharedRandomness randomness, IndexCode code)
    : codebook_(std::move(prior), randomness), code_(code) {}

Hypothesis Receiver::receive(std::span<const std::uint8_t> bytes) const {
  const WireMessage msg = decode_message(bytes, code_, codebook_.dim());
  return decode(msg.index, msg.precision, codebook_);
}

}  // namespace mincomm
