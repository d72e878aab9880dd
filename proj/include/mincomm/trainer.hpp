#pragma once

// Synthetic binary tasks and the mini-batch SGD learner, optionally
// regularized by KL(P(.|w) || Q).

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mincomm/codebook.hpp"
#include "mincomm/hypothesis.hpp"
#include "mincomm/kernel.hpp"

namespace mincomm {

struct TrainConfig {
  double learning_rate = 1.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  double kl_weight = 0.03;
  std::uint64_t seed = 1;

  void validate() const;
  std::string describe() const;
};

/// Features uniform in the ball of radius feature_bound; label
/// 1{sigmoid(true_w . x) > 1/2}, flipped with probability label_noise.
class SyntheticTask final : public DataDistribution {
 public:
  SyntheticTask(Hypothesis true_w, double feature_bound, double label_noise);

  /// true_w is a uniformly random direction scaled to `true_w_norm`.
  static SyntheticTask make(std::size_t dim, double label_noise, std::uint64_t seed, double true_w_norm = 3.0,
                            double feature_bound = 2.0);

  std::size_t dim() const override { return true_w_.dim(); }
  void draw(Rng& rng, std::span<double> x, std::uint8_t& y) const override;

  Dataset sample_dataset(std::size_t n, std::uint64_t seed) const;

  const Hypothesis& true_w() const { return true_w_; }
  double feature_bound() const { return feature_bound_; }
  double label_noise() const { return label_noise_; }
  LossSpec loss_spec() const { return LossSpec::for_feature_bound(feature_bound_); }

 private:
  Hypothesis true_w_;
  double feature_bound_;
  double label_noise_;
};

/// Task and one n-sample dataset from a single seed.
std::pair<Dataset, SyntheticTask> make_synthetic_task(std::size_t dim, std::size_t n, double label_noise,
                                                      std::uint64_t seed);

/// empirical_risk(S, w) + kl_weight * kl_to_prior(w).
double training_objective(const Dataset& s, std::span<const double> w, double kl_weight, const Prior& prior,
                          const QuantKernel& kernel, const LossSpec& spec);

/// Gradient of the objective restricted to the samples in `batch` (all
/// samples when empty). Writes into `grad` (size d).
void objective_gradient(const Dataset& s, std::span<const std::size_t> batch, std::span<const double> w,
                        double kl_weight, const Prior& prior, std::span<double> grad);

/// Mini-batch SGD from w = 0. Deterministic given cfg.seed. Throws
/// DivergenceError if ||w|| exceeds 1e6.
Hypothesis sgd_train(const Dataset& s, const TrainConfig& cfg, const Prior& prior, const QuantKernel& kernel,
                     const LossSpec& spec);

}  // namespace mincomm
