#pragma once

// Client -> server message. Layout (see docs/wire_format.md):
//
//   index   u32 LE bit count | index-code bits packed MSB-first
//   mode    u8: 0 none, 1 full, 2 quantized
//   full:       d x f64 LE, the model coordinates
//   quantized:  u8 bits | f64 LE scale | d codes of `bits` bits, MSB-first,
//               zero-padded to a byte boundary

#include <cstdint>
#include <span>
#include <vector>

#include "mincomm/codebook.hpp"
#include "mincomm/encoders.hpp"
#include "mincomm/index_codec.hpp"

namespace mincomm {

struct WireMessage {
  std::uint64_t index = 1;
  PrecisionPayload precision;
};

std::vector<std::uint8_t> encode_message(const WireMessage& msg, const IndexCode& code);

/// `dim` is the model dimension both sides agreed on through the prior.
WireMessage decode_message(std::span<const std::uint8_t> bytes, const IndexCode& code, std::size_t dim);

/// Bits spent on the index field proper (excluding the u32 length prefix).
std::size_t index_field_bits(std::uint64_t index, const IndexCode& code);

/// Server side of the link. Owns a codebook rebuilt from the shared seed
/// and prior alone; it never sees the client's objects.
class Receiver {
 public:
  Receiver(Prior prior, SharedRandomness randomness, IndexCode code);

  Hypothesis receive(std::span<const std::uint8_t> bytes) const;
  const Codebook& codebook() const { return codebook_; }

 private:
  Codebook codebook_;
  IndexCode code_;
};

}  // namespace mincomm
