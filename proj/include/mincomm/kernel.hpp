#pragma once

// The client-chosen quantization rule P(W_hat | W = w) = N(w, variance * I),
// together with its density ratio against the prior.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mincomm/codebook.hpp"
#include "mincomm/hypothesis.hpp"

namespace mincomm {

struct QuantKernel {
  double variance = 1.0;
};

/// Which law W_hat is drawn from when measuring the log-ratio tail.
enum class TailMeasure { kernel, prior };

/// log dP(.|w)/dQ at w_hat, in nats.
double log_density_ratio(std::span<const double> w, std::span<const double> w_hat, const QuantKernel& k,
                         const Prior& q);
double log_density_ratio(const Hypothesis& w, const Hypothesis& w_hat, const QuantKernel& k, const Prior& q);

/// KL(P(.|w) || Q) = (d/2)(r - 1 - ln r) + ||w - mu||^2 / (2 prior_var), r = kernel_var / prior_var.
double kl_to_prior(const Hypothesis& w, const QuantKernel& k, const Prior& q);

/// sup over w_hat of the log ratio. Finite only when kernel_var < prior_var.
std::optional<double> max_log_density_ratio(const Hypothesis& w, const QuantKernel& k, const Prior& q);

/// Draw from N(w, variance * I). Zero variance returns w.
Hypothesis sample_kernel(const Hypothesis& w, const QuantKernel& k, std::uint64_t seed);
void sample_kernel_into(std::span<const double> w, const QuantKernel& k, Rng& rng, std::span<double> out);

/// The log ratio as a random variable under the chosen measure:
///   log rho = offset + quad * ||z||^2 + linear * z_1,   z ~ N(0, I_d).
struct LogRatioLaw {
  std::size_t dim = 0;
  double offset = 0.0;
  double quad = 0.0;
  double linear = 0.0;
};

LogRatioLaw log_ratio_law(const Hypothesis& w, const QuantKernel& k, const Prior& q,
                          TailMeasure measure = TailMeasure::kernel);

/// P(offset + quad ||z||^2 + linear z_1 > threshold), exact (Gaussian or
/// noncentral chi-square reduction).
double log_ratio_exceedance(const LogRatioLaw& law, double threshold);

struct TailEstimate {
  double t = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t m = 0;
  double semi_analytic = 0.0;
  bool precision_warning = false;
};

/// P(log rho_w(W_hat) > KL + t/2) under `measure`, exactly.
double log_ratio_tail_exact(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                            TailMeasure measure = TailMeasure::kernel);

/// Monte Carlo tail with a 95% Wilson interval plus the exact value.
/// m < 1000 sets precision_warning.
TailEstimate log_ratio_tail(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t m,
                            std::uint64_t seed, TailMeasure measure = TailMeasure::kernel);

/// Tails at several t from one set of draws (common random numbers), so
/// the estimates are monotone in t by construction.
std::vector<TailEstimate> log_ratio_tail_sweep(const Hypothesis& w, const QuantKernel& k, const Prior& q,
                                               std::span<const double> ts, std::size_t m, std::uint64_t seed,
                                               TailMeasure measure = TailMeasure::kernel);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval for `successes` out of `trials`.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

}  // namespace mincomm
