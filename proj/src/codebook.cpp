#include "mincomm/codebook.hpp"

#include <cmath>

#include "mincomm/error.hpp"

namespace mincomm {

namespace {

constexpr std::uint64_t kCodewordTag = tag_of("codeword");

}  // namespace

void Prior::validate() const {
  if (mean.empty()) throw ConfigError("prior mean must have dimension > 0");
  if (!(variance > 0.0) || !std::isfinite(variance)) throw ConfigError("prior variance must be positive");
  for (double v : mean) {
    if (!std::isfinite(v)) throw ConfigError("prior mean has a non-finite entry");
  }
}

void derive_codeword_into(const SharedRandomness& rand, std::uint64_t j, const Prior& q, std::span<double> out) {
  if (j == 0) throw ConfigError("codeword indices start at 1");
  if (out.size() != q.dim()) throw ConfigError("codeword buffer has wrong dimension");
  // Zero variance is accepted here so tests can exercise the degenerate limit.
  const double scale = std::sqrt(q.variance);
  Rng rng(derive_seed(rand.master_seed, j, kCodewordTag));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.mean[i] + scale * rng.normal();
}

Hypothesis derive_codeword(const SharedRandomness& rand, std::uint64_t j, const Prior& q) {
  std::vector<double> out(q.dim());
  derive_codeword_into(rand, j, q, out);
  return Hypothesis(std::move(out));
}

Codebook::Codebook(Prior prior, SharedRandomness randomness, std::uint64_t capacity)
    : prior_(std::move(prior)), randomness_(randomness), capacity_(capacity) {
  prior_.validate();
}

void Codebook::check_index(std::uint64_t j) const {
  if (j == 0 || (capacity_ != 0 && j > capacity_)) {
    throw ConfigError("codeword index " + std::to_string(j) + " outside codebook");
  }
}

Hypothesis Codebook::codeword(std::uint64_t j) const {
  check_index(j);
  return derive_codeword(randomness_, j, prior_);
}

void Codebook::codeword_into(std::uint64_t j, std::span<double> out) const {
  check_index(j);
  derive_codeword_into(randomness_, j, prior_, out);
}

std::vector<Hypothesis> materialize(const Codebook& cb, std::uint64_t n) {
  if (n == 0) throw ConfigError("cannot materialize an empty codebook");
  std::vector<Hypothesis> out;
  out.reserve(n);
  for (std::uint64_t j = 1; j <= n; ++j) out.push_back(cb.codeword(j));
  return out;
}

}  // namespace mincomm
