#include <cmath>
#include <vector>

#include "doctest.h"
#include "mincomm/error.hpp"
#include "mincomm/index_codec.hpp"
#include "mincomm/rng.hpp"

using namespace mincomm;

namespace {

std::vector<IndexCode> all_codes() {
  return {IndexCode::elias_delta(),   IndexCode::zipf(2.0),           IndexCode::zipf(1.05),
          IndexCode::zipf_for_rate(0), IndexCode::zipf_for_rate(2.87), IndexCode::zipf_for_rate(40.0)};
}

}  // namespace

TEST_CASE("Elias delta table") {
  const auto ed = IndexCode::elias_delta();
  CHECK(encode_index(1, ed).to_string() == "1");
  CHECK(encode_index(2, ed).to_string() == "0100");
  CHECK(encode_index(3, ed).to_string() == "0101");
  CHECK(encode_index(4, ed).to_string() == "01100");
  CHECK(encode_index(17, ed).to_string() == "001010001");
  CHECK(code_length_bits(std::uint64_t{1} << 32, ed) == 43);
}

TEST_CASE("Zipf rate and Golomb parameter") {
  CHECK(IndexCode::zipf(2.0).golomb_parameter() == 1);
  CHECK(IndexCode::zipf_for_rate(2.87).zipf_exponent == doctest::Approx(1.0 + 1.0 / (2.87 + std::exp(-1.0))));
  CHECK(IndexCode::zipf_for_rate(2.87).golomb_parameter() == 3);
  CHECK(IndexCode::zipf(1.05).golomb_parameter() == 20);
  CHECK_THROWS_AS(IndexCode::zipf(1.0), ConfigError);
  CHECK_THROWS_AS(IndexCode::zipf_for_rate(-1.0), ConfigError);
}

TEST_CASE("round trip for small, boundary and random indices") {
  Rng rng(1);
  for (const auto& code : all_codes()) {
    for (std::uint64_t k = 1; k <= 10000; ++k) REQUIRE(decode_index(encode_index(k, code), code) == k);
    for (std::uint64_t k : {std::uint64_t{1} << 32, (std::uint64_t{1} << 32) - 1, ~std::uint64_t{0}}) {
      CHECK(decode_index(encode_index(k, code), code) == k);
    }
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t k = 1 + rng.below(std::uint64_t{1} << 32);
      REQUIRE(decode_index(encode_index(k, code), code) == k);
    }
    CHECK_THROWS_AS(encode_index(0, code), ConfigError);
  }
}

TEST_CASE("concatenated codewords decode in sequence") {
  Rng rng(2);
  for (const auto& code : all_codes()) {
    std::vector<std::uint64_t> ks;
    BitString bits;
    for (int i = 0; i < 300; ++i) {
      ks.push_back(1 + rng.below(1u << (1 + rng.below(30))));
      encode_index(ks.back(), code, bits);
    }
    BitReader in(bits);
    for (std::uint64_t k : ks) REQUIRE(decode_index(in, code) == k);
    CHECK(in.done());
  }
}

TEST_CASE("fuzzed bit strings decode or raise DecodeError") {
  Rng rng(3);
  for (const auto& code : all_codes()) {
    for (int i = 0; i < 3000; ++i) {
      BitString bits;
      const std::size_t len = rng.below(90);
      for (std::size_t j = 0; j < len; ++j) bits.push(rng.below(2) == 1);
      try {
        const std::uint64_t k = decode_index(bits, code);
        CHECK(k >= 1);
        CHECK(encode_index(k, code) == bits);
      } catch (const DecodeError&) {
      }
    }
  }
  CHECK_THROWS_AS(decode_index(BitString::from_string("1") , IndexCode::zipf(2.0)), DecodeError);
  CHECK_THROWS_AS(decode_index(BitString::from_string("11"), IndexCode::elias_delta()), DecodeError);
  CHECK_THROWS_AS(decode_index(BitString::from_string("0000000"), IndexCode::elias_delta()), DecodeError);
}

TEST_CASE("bit string serialization") {
  const auto bits = BitString::from_string("1011001110");
  const auto bytes = bits.serialize();
  REQUIRE(bytes.size() == 6);
  CHECK(bytes[0] == 10);
  CHECK(bytes[4] == 0b10110011);
  CHECK(bytes[5] == 0b10000000);
  std::size_t used = 0;
  CHECK(BitString::deserialize(bytes, &used) == bits);
  CHECK(used == 6);
  CHECK_THROWS(BitString::deserialize(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)));
  CHECK_THROWS_AS(BitString::from_string("10a"), ConfigError);
}

TEST_CASE("communication budget") {
  CHECK(comm_budget(0.0) == 4.0);
  CHECK(comm_budget(1.0) == doctest::Approx(5.6931471806).epsilon(1e-10));
  CHECK(comm_budget(10.0) == doctest::Approx(16.3978952728).epsilon(1e-10));
  CHECK_THROWS_AS(comm_budget(-0.1), ConfigError);
}

TEST_CASE("Zipf code length tracks the rate") {
  // Under a fitted rate, ln K + ln(C + 1) style overhead: code length in nats for
  // K ~ e^C stays below comm_budget(C) plus a small codec slack.
  for (double c : {0.0, 2.0, 5.0, 10.0}) {
    const auto code = IndexCode::zipf_for_rate(c);
    const auto k = static_cast<std::uint64_t>(std::ceil(std::exp(c)));
    CHECK(code_length_bits(k, code) * std::log(2.0) <= comm_budget(c) + 0.7);
  }
}
