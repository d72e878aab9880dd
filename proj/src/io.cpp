#include "mincomm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mincomm/error.hpp"

namespace mincomm {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_magic(std::vector<std::uint8_t>& out, const char (&magic)[5]) {
  out.insert(out.end(), magic, magic + 4);
}

void expect_magic(ByteReader& in, const char (&magic)[5]) {
  auto got = in.take(4);
  if (std::memcmp(got.data(), magic, 4) != 0) throw DecodeError(std::string("bad magic, expected ") + magic);
}

}  // namespace

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (n > remaining()) throw DecodeError("truncated buffer");
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& s) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + s.size() * (s.dim() * 8 + 1));
  put_magic(out, "RCDS");
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_u32(out, static_cast<std::uint32_t>(s.dim()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto z = s[i];
    for (double v : z.x) put_f64(out, v);
    out.push_back(z.y);
  }
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, "RCDS");
  if (in.u32() != kVersion) throw DecodeError("unsupported dataset version");
  const std::uint32_t n = in.u32();
  const std::uint32_t d = in.u32();
  if (static_cast<std::uint64_t>(n) * (static_cast<std::uint64_t>(d) * 8 + 1) != in.remaining()) {
    throw DecodeError("dataset payload size does not match header");
  }
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  features.reserve(static_cast<std::size_t>(n) * d);
  labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) features.push_back(in.f64());
    labels.push_back(in.u8());
  }
  try {
    return Dataset(d, std::move(features), std::move(labels));
  } catch (const ConfigError& e) {
    throw DecodeError(std::string("invalid dataset: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_model(const Hypothesis& w) {
  std::vector<std::uint8_t> out;
  put_magic(out, "RCMW");
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(w.dim()));
  for (double v : w.coords()) put_f64(out, v);
  return out;
}

Hypothesis decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, "RCMW");
  if (in.u32() != kVersion) throw DecodeError("unsupported model version");
  const std::uint32_t d = in.u32();
  if (static_cast<std::uint64_t>(d) * 8 != in.remaining()) throw DecodeError("model payload size mismatch");
  std::vector<double> coords(d);
  for (auto& v : coords) v = in.f64();
  try {
    return Hypothesis(std::move(coords));
  } catch (const ConfigError& e) {
    throw DecodeError(std::string("invalid model: ") + e.what());
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_dataset(const std::filesystem::path& path, const Dataset& s) { write_file(path, encode_dataset(s)); }

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

void write_model(const std::filesystem::path& path, const Hypothesis& w) { write_file(path, encode_model(w)); }

Hypothesis read_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace mincomm
