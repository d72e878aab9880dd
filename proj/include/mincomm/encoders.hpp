#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mincomm/codebook.hpp"
#include "mincomm/hypothesis.hpp"
#include "mincomm/kernel.hpp"

namespace mincomm {

enum class EncoderKind { mrc, orc, vq };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view text);

struct PrecisionMode {
  enum class Kind { none, full, quantized };
  Kind kind = Kind::none;
  unsigned bits = 0;  // quantized only, 1..32

  static PrecisionMode none() { return {}; }
  static PrecisionMode full() { return {Kind::full, 0}; }
  static PrecisionMode quantized(unsigned bits) { return {Kind::quantized, bits}; }

  /// "none", "full", "q<bits>" (also "0" as none, "<bits>" as quantized).
  static PrecisionMode parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const PrecisionMode&) const = default;
};

/// The residual W_eps sent alongside the index. For quantized mode
/// `values[i] == scale * unit_level(codes[i], bits)`.
struct PrecisionPayload {
  PrecisionMode mode;
  std::vector<double> values;
  std::uint64_t payload_bits = 0;
  std::vector<std::uint32_t> codes;
  double scale = 0.0;
  /// Full mode only: the model coordinates. A double residual cannot always
  /// restore w bit-exactly (|w_i| << |codeword_i|), so full mode carries w
  /// and the residual is target - codeword. After wire decoding `values`
  /// is empty for full mode.
  std::vector<double> target;
};

/// Reconstruction level of a midrise code on [-1, 1] with 2^bits levels.
double unit_level(std::uint32_t code, unsigned bits);

/// Rebuild a quantized payload from its transmitted codes and scale.
PrecisionPayload dequantize(unsigned bits, std::vector<std::uint32_t> codes, double scale);

struct EncodingResult {
  std::uint64_t index = 1;
  /// Candidates actually scored (ORC may stop early).
  std::uint64_t candidates_examined = 0;
  /// N_W for MRC/ORC, N for VQ.
  std::uint64_t candidate_count = 0;
  PrecisionPayload precision;
  EncoderKind encoder_kind = EncoderKind::orc;
};

/// Lazily evaluated log rho_w(codeword j) for j = 1, 2, ... on one codebook.
/// Reuse across encoder draws on the same (w, codebook).
class LogRatioTable {
 public:
  LogRatioTable(const Codebook& cb, Hypothesis w, QuantKernel k);

  double operator()(std::uint64_t j);
  const Hypothesis& hypothesis() const { return w_; }
  const QuantKernel& kernel() const { return kernel_; }
  const Codebook& codebook() const { return cb_; }
  double kl() const { return kl_; }
  std::optional<double> upper_bound() const { return upper_; }

 private:
  const Codebook& cb_;
  Hypothesis w_;
  QuantKernel kernel_;
  double kl_;
  std::optional<double> upper_;
  std::vector<double> values_;
  std::vector<double> scratch_;
};

/// Descending order statistics of `count` i.i.d. standard Gumbels, one at a
/// time: each value is a Gumbel with location log(remaining) truncated
/// below the previous one. Not shareable mid-sequence.
class GumbelStream {
 public:
  GumbelStream(std::uint64_t seed, std::uint64_t count);

  bool has_next() const { return emitted_ < count_; }
  double next();
  std::uint64_t emitted() const { return emitted_; }

 private:
  Rng rng_;
  std::uint64_t count_;
  std::uint64_t emitted_ = 0;
  double neg_exp_ = 0.0;  // exp(-previous value)
};

constexpr std::uint64_t kDefaultOrcCap = std::uint64_t{1} << 26;

struct OrcOptions {
  std::uint64_t cap = kDefaultOrcCap;
  /// Stop once no remaining candidate can beat the incumbent (needs a
  /// finite upper bound on the log ratio).
  bool early_stop = true;
};

/// ceil(exp(kl + t)); throws CapExceededError above `cap`.
std::uint64_t orc_candidate_count(double kl, double t, std::uint64_t cap = kDefaultOrcCap);

/// Index in [1, n_w] drawn with probability proportional to rho_w.
EncodingResult encode_mrc(LogRatioTable& table, std::uint64_t n_w, std::uint64_t seed);
EncodingResult encode_mrc(const Hypothesis& w, const Codebook& cb, std::uint64_t n_w, const QuantKernel& k,
                          std::uint64_t seed);

/// argmax over n <= N_W of log rho_w(codeword n) + G_n with G_1 >= G_2 >= ...
EncodingResult encode_orc(LogRatioTable& table, double t, std::uint64_t seed, const OrcOptions& options = {});
EncodingResult encode_orc(const Hypothesis& w, const Codebook& cb, double t, const QuantKernel& k,
                          std::uint64_t seed, const OrcOptions& options = {});

/// Nearest of the first n codewords; ties go to the smallest index.
EncodingResult encode_vq(const Hypothesis& w, const Codebook& cb, std::uint64_t n);

/// W_eps for residual w - codeword. Always satisfies ||W_eps|| <= ||w - codeword||
/// and ||w - codeword - W_eps|| <= ||w - codeword||.
PrecisionPayload quantize_residual(const Hypothesis& w, const Hypothesis& codeword, PrecisionMode mode);

/// codeword K + W_eps.
Hypothesis decode(std::uint64_t k, const PrecisionPayload& payload, const Codebook& cb);

/// ||w - codeword K|| - ||w - decode(K, W_eps)||, clamped at 0 after a
/// 1e-12 tolerance; more negative raises ContractViolation.
double delta_u(const Hypothesis& w, std::uint64_t k, const PrecisionPayload& payload, const Codebook& cb);

}  // namespace mincomm
