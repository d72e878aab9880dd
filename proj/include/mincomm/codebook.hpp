#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mincomm/hypothesis.hpp"

namespace mincomm {

/// Isotropic Gaussian prior Q = N(mean, variance * I).
struct Prior {
  std::vector<double> mean;
  double variance = 1.0;

  std::size_t dim() const { return mean.size(); }
  /// Throws ConfigError unless variance > 0 and the mean is finite.
  void validate() const;
};

struct SharedRandomness {
  std::uint64_t master_seed = 0;
};

/// Codeword j (1-based) of the codebook: mean + sqrt(variance) * g, where g
/// is a standard normal d-vector drawn from a PRNG keyed by (seed, j).
/// Random access in O(d); no dependence on other indices.
Hypothesis derive_codeword(const SharedRandomness& rand, std::uint64_t j, const Prior& q);

/// Same as derive_codeword but writes into `out` (size d) without allocating.
void derive_codeword_into(const SharedRandomness& rand, std::uint64_t j, const Prior& q, std::span<double> out);

/// A lazily-evaluated codebook. Capacity 0 means unbounded (ordered coding
/// sizes the codebook per hypothesis); codewords are never stored.
class Codebook {
 public:
  Codebook(Prior prior, SharedRandomness randomness, std::uint64_t capacity = 0);

  const Prior& prior() const { return prior_; }
  const SharedRandomness& randomness() const { return randomness_; }
  std::uint64_t capacity() const { return capacity_; }
  std::size_t dim() const { return prior_.dim(); }

  Hypothesis codeword(std::uint64_t j) const;
  void codeword_into(std::uint64_t j, std::span<double> out) const;

 private:
  void check_index(std::uint64_t j) const;

  Prior prior_;
  SharedRandomness randomness_;
  std::uint64_t capacity_;
};

/// Codewords 1..n in order. n = 0 is a configuration error.
std::vector<Hypothesis> materialize(const Codebook& cb, std::uint64_t n);

}  // namespace mincomm
