#include "mincomm/encoders.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "mincomm/error.hpp"

namespace mincomm {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::mrc: return "mrc";
    case EncoderKind::orc: return "orc";
    case EncoderKind::vq: return "vq";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "mrc") return EncoderKind::mrc;
  if (text == "orc") return EncoderKind::orc;
  if (text == "vq") return EncoderKind::vq;
  throw ConfigError("unknown encoder kind: " + std::string(text));
}

PrecisionMode PrecisionMode::parse(std::string_view text) {
  if (text == "none" || text == "0") return none();
  if (text == "full") return full();
  std::string_view digits = text;
  if (!digits.empty() && (digits.front() == 'q' || digits.front() == 'b')) digits.remove_prefix(1);
  unsigned bits = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), bits);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    throw ConfigError("invalid precision mode: " + std::string(text));
  }
  if (bits == 0) throw ConfigError("quantized precision needs at least 1 bit (use none)");
  if (bits > 32) throw ConfigError("quantized precision supports at most 32 bits");
  return quantized(bits);
}

std::string PrecisionMode::to_string() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::full: return "full";
    case Kind::quantized: return "q" + std::to_string(bits);
  }
  return "unknown";
}

double unit_level(std::uint32_t code, unsigned bits) {
  const double levels = std::ldexp(1.0, static_cast<int>(bits));
  return -1.0 + (2.0 * static_cast<double>(code) + 1.0) / levels;
}

PrecisionPayload dequantize(unsigned bits, std::vector<std::uint32_t> codes, double scale) {
  if (bits == 0 || bits > 32) throw ConfigError("quantized precision needs 1..32 bits");
  PrecisionPayload p;
  p.mode = PrecisionMode::quantized(bits);
  p.scale = scale;
  p.values.resize(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) p.values[i] = scale * unit_level(codes[i], bits);
  p.payload_bits = static_cast<std::uint64_t>(bits) * codes.size() + 64;
  p.codes = std::move(codes);
  return p;
}

LogRatioTable::LogRatioTable(const Codebook& cb, Hypothesis w, QuantKernel k)
    : cb_(cb),
      w_(std::move(w)),
      kernel_(k),
      kl_(kl_to_prior(w_, kernel_, cb.prior())),
      upper_(max_log_density_ratio(w_, kernel_, cb.prior())),
      scratch_(cb.dim()) {}

double LogRatioTable::operator()(std::uint64_t j) {
  if (j == 0) throw ConfigError("codeword indices start at 1");
  while (values_.size() < j) {
    cb_.codeword_into(values_.size() + 1, scratch_);
    values_.push_back(log_density_ratio(w_.coords(), scratch_, kernel_, cb_.prior()));
  }
  return values_[j - 1];
}

GumbelStream::GumbelStream(std::uint64_t seed, std::uint64_t count) : rng_(seed), count_(count) {}

double GumbelStream::next() {
  if (!has_next()) throw ConfigError("Gumbel stream exhausted");
  neg_exp_ += rng_.exponential() / static_cast<double>(count_ - emitted_);
  ++emitted_;
  return -std::log(neg_exp_);
}

std::uint64_t orc_candidate_count(double kl, double t, std::uint64_t cap) {
  if (!(t > 0.0)) throw ConfigError("ORC needs t > 0");
  const double required = std::ceil(std::exp(kl + t));
  if (!(required <= static_cast<double>(cap))) throw CapExceededError(required, cap);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(required));
}

EncodingResult encode_mrc(LogRatioTable& table, std::uint64_t n_w, std::uint64_t seed) {
  if (n_w == 0) throw ConfigError("MRC needs n_w >= 1");
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint64_t j = 1; j <= n_w; ++j) top = std::max(top, table(j));
  if (!std::isfinite(top)) throw NumericError("all MRC density ratios underflow");
  double total = 0.0;
  for (std::uint64_t j = 1; j <= n_w; ++j) total += std::exp(table(j) - top);

  Rng rng(seed);
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::uint64_t chosen = n_w;
  for (std::uint64_t j = 1; j <= n_w; ++j) {
    acc += std::exp(table(j) - top);
    if (target < acc) {
      chosen = j;
      break;
    }
  }
  EncodingResult out;
  out.index = chosen;
  out.candidates_examined = n_w;
  out.candidate_count = n_w;
  out.encoder_kind = EncoderKind::mrc;
  return out;
}

EncodingResult encode_mrc(const Hypothesis& w, const Codebook& cb, std::uint64_t n_w, const QuantKernel& k,
                          std::uint64_t seed) {
  LogRatioTable table(cb, w, k);
  return encode_mrc(table, n_w, seed);
}

EncodingResult encode_orc(LogRatioTable& table, double t, std::uint64_t seed, const OrcOptions& options) {
  const std::uint64_t n_w = orc_candidate_count(table.kl(), t, options.cap);
  const auto upper = options.early_stop ? table.upper_bound() : std::nullopt;

  GumbelStream gumbels(seed, n_w);
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t chosen = 1;
  std::uint64_t examined = 0;
  while (gumbels.has_next()) {
    const double g = gumbels.next();
    // Gumbels only decrease from here on.
    if (upper && g + *upper <= best) break;
    const std::uint64_t n = gumbels.emitted();
    const double score = table(n) + g;
    examined = n;
    if (score > best) {
      best = score;
      chosen = n;
    }
  }
  EncodingResult out;
  out.index = chosen;
  out.candidates_examined = examined;
  out.candidate_count = n_w;
  out.encoder_kind = EncoderKind::orc;
  return out;
}

EncodingResult encode_orc(const Hypothesis& w, const Codebook& cb, double t, const QuantKernel& k,
                          std::uint64_t seed, const OrcOptions& options) {
  LogRatioTable table(cb, w, k);
  return encode_orc(table, t, seed, options);
}

EncodingResult encode_vq(const Hypothesis& w, const Codebook& cb, std::uint64_t n) {
  if (n == 0) throw ConfigError("VQ needs N >= 1");
  if (w.dim() != cb.dim()) throw ConfigError("VQ: dimension mismatch");
  std::vector<double> c(cb.dim());
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t chosen = 1;
  for (std::uint64_t j = 1; j <= n; ++j) {
    cb.codeword_into(j, c);
    const double dist = squared_distance(w.coords(), c);
    if (dist < best) {
      best = dist;
      chosen = j;
    }
  }
  EncodingResult out;
  out.index = chosen;
  out.candidates_examined = n;
  out.candidate_count = n;
  out.encoder_kind = EncoderKind::vq;
  return out;
}

namespace {

// W_eps = residual except where codeword + residual does not round back to
// w; then the nearest double that does, preferring smaller magnitude so the
// norm bound is kept.
}  // namespace

PrecisionPayload quantize_residual(const Hypothesis& w, const Hypothesis& codeword, PrecisionMode mode) {
  if (w.dim() != codeword.dim()) throw ConfigError("quantize_residual: dimension mismatch");
  const std::size_t d = w.dim();
  const std::vector<double> r = w - codeword;
  const double r_norm = norm(r);

  PrecisionPayload p;
  p.mode = mode;
  switch (mode.kind) {
    case PrecisionMode::Kind::none:
      p.values.assign(d, 0.0);
      p.payload_bits = 0;
      return p;
    case PrecisionMode::Kind::full: {
      p.values = r;
      p.target = w.vec();
      p.payload_bits = 64 * static_cast<std::uint64_t>(d);
      return p;
    }
    case PrecisionMode::Kind::quantized:
      break;
  }

  const unsigned bits = mode.bits;
  if (bits == 0) throw ConfigError("quantized precision needs at least 1 bit (use none)");
  if (bits > 32) throw ConfigError("quantized precision supports at most 32 bits");
  const double range = std::transform_reduce(r.begin(), r.end(), 0.0, [](double a, double b) { return std::max(a, b); },
                                             [](double v) { return std::abs(v); });
  const std::uint64_t levels = std::uint64_t{1} << bits;
  std::vector<std::uint32_t> codes(d, static_cast<std::uint32_t>(levels / 2));
  std::vector<double> unit(d, 0.0);
  double scale = 0.0;
  if (range > 0.0) {
    for (std::size_t i = 0; i < d; ++i) {
      const double pos = (r[i] / range + 1.0) * 0.5 * static_cast<double>(levels);
      const double idx = std::clamp(std::floor(pos), 0.0, static_cast<double>(levels - 1));
      codes[i] = static_cast<std::uint32_t>(idx);
      unit[i] = unit_level(codes[i], bits);
    }
    const double unit_norm = norm(unit);
    // Midrise reconstruction range * unit, then radial shrink into the ball of radius ||r||.
    scale = std::min(range, r_norm / unit_norm);
    auto error_norm = [&](double s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += (r[i] - s * unit[i]) * (r[i] - s * unit[i]);
      return std::sqrt(acc);
    };
    if (error_norm(scale) > r_norm) {
      // Only reachable when 2^bits is small relative to d: fall back to the
      // least-squares scale along the same code vector.
      scale = std::clamp(dot(r, unit) / (unit_norm * unit_norm), 0.0, scale);
    }
    auto value_norm = [&](double s) { return std::abs(s) * unit_norm; };
    for (int guard = 0; guard < 64 && (value_norm(scale) > r_norm || error_norm(scale) > r_norm); ++guard) {
      scale = std::nextafter(scale, 0.0);
    }
    if (value_norm(scale) > r_norm || error_norm(scale) > r_norm) scale = 0.0;
  }
  // dequantize recomputes values from (codes, scale); re-check both bounds
  // on the exact transmitted reconstruction and shave ulps if rounding broke them.
  auto holds = [&](const PrecisionPayload& cand) {
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) err += (r[i] - cand.values[i]) * (r[i] - cand.values[i]);
    return norm(cand.values) <= r_norm && std::sqrt(err) <= r_norm;
  };
  p = dequantize(bits, codes, scale);
  for (int guard = 0; guard < 64 && !holds(p); ++guard) {
    scale = std::nextafter(scale, 0.0);
    p = dequantize(bits, codes, scale);
  }
  if (!holds(p)) p = dequantize(bits, std::move(codes), 0.0);
  return p;
}

Hypothesis decode(std::uint64_t k, const PrecisionPayload& payload, const Codebook& cb) {
  if (payload.mode.kind == PrecisionMode::Kind::full && !payload.target.empty()) {
    if (payload.target.size() != cb.dim()) throw ConfigError("decode: payload dimension mismatch");
    return Hypothesis(payload.target);
  }
  Hypothesis c = cb.codeword(k);
  if (payload.values.empty()) return c;
  return c + std::span<const double>(payload.values);
}

double delta_u(const Hypothesis& w, std::uint64_t k, const PrecisionPayload& payload, const Codebook& cb) {
  const Hypothesis c = cb.codeword(k);
  const Hypothesis decoded = decode(k, payload, cb);
  const double delta = distance(w.coords(), c.coords()) - distance(w.coords(), decoded.coords());
  if (delta < -1e-12) throw ContractViolation("precision payload moved the decoded model away from w");
  return std::max(0.0, delta);
}

}  // namespace mincomm
