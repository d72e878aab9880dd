#include "mincomm/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "mincomm/error.hpp"

namespace mincomm {

namespace {

void require_nondegenerate(const QuantKernel& k, const Prior& q) {
  if (!(k.variance > 0.0)) throw DegenerateKernelError("kernel variance must be positive");
  if (!(q.variance > 0.0)) throw DegenerateKernelError("prior variance must be positive");
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

double log_density_ratio(std::span<const double> w, std::span<const double> w_hat, const QuantKernel& k,
                         const Prior& q) {
  require_nondegenerate(k, q);
  if (w.size() != w_hat.size() || w.size() != q.dim()) throw ConfigError("log_density_ratio: dimension mismatch");
  const double d = static_cast<double>(w.size());
  double to_w = 0.0;
  double to_mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = w_hat[i] - w[i];
    const double b = w_hat[i] - q.mean[i];
    to_w += a * a;
    to_mean += b * b;
  }
  return -0.5 * d * std::log(k.variance / q.variance) - to_w / (2.0 * k.variance) + to_mean / (2.0 * q.variance);
}

double log_density_ratio(const Hypothesis& w, const Hypothesis& w_hat, const QuantKernel& k, const Prior& q) {
  return log_density_ratio(w.coords(), w_hat.coords(), k, q);
}

double kl_to_prior(const Hypothesis& w, const QuantKernel& k, const Prior& q) {
  require_nondegenerate(k, q);
  if (w.dim() != q.dim()) throw ConfigError("kl_to_prior: dimension mismatch");
  const double r = k.variance / q.variance;
  const double d = static_cast<double>(w.dim());
  const double shape = 0.5 * d * (r - 1.0 - std::log(r));
  return std::max(0.0, shape) + squared_distance(w.coords(), q.mean) / (2.0 * q.variance);
}

std::optional<double> max_log_density_ratio(const Hypothesis& w, const QuantKernel& k, const Prior& q) {
  require_nondegenerate(k, q);
  if (!(k.variance < q.variance)) return std::nullopt;
  const double alpha = 1.0 / k.variance;
  const double beta = 1.0 / q.variance;
  const double d = static_cast<double>(w.dim());
  const double dist_sq = squared_distance(w.coords(), q.mean);
  return -0.5 * d * std::log(k.variance / q.variance) + alpha * beta * dist_sq / (2.0 * (alpha - beta));
}

void sample_kernel_into(std::span<const double> w, const QuantKernel& k, Rng& rng, std::span<double> out) {
  if (k.variance < 0.0) throw DegenerateKernelError("kernel variance must be non-negative");
  const double sd = std::sqrt(k.variance);
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] + sd * rng.normal();
}

Hypothesis sample_kernel(const Hypothesis& w, const QuantKernel& k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(w.dim());
  sample_kernel_into(w.coords(), k, rng, out);
  return Hypothesis(std::move(out));
}

LogRatioLaw log_ratio_law(const Hypothesis& w, const QuantKernel& k, const Prior& q, TailMeasure measure) {
  require_nondegenerate(k, q);
  const double d = static_cast<double>(w.dim());
  const double r = k.variance / q.variance;
  const double dist_sq = squared_distance(w.coords(), q.mean);
  const double dist = std::sqrt(dist_sq);
  LogRatioLaw law;
  law.dim = w.dim();
  if (measure == TailMeasure::kernel) {
    // w_hat = w + sigma z
    law.offset = -0.5 * d * std::log(r) + dist_sq / (2.0 * q.variance);
    law.quad = 0.5 * (r - 1.0);
    law.linear = std::sqrt(k.variance) * dist / q.variance;
  } else {
    // w_hat = mu + varsigma z
    law.offset = -0.5 * d * std::log(r) - dist_sq / (2.0 * k.variance);
    law.quad = 0.5 * (1.0 - 1.0 / r);
    law.linear = std::sqrt(q.variance) * dist / k.variance;
  }
  return law;
}

double log_ratio_exceedance(const LogRatioLaw& law, double threshold) {
  if (std::abs(law.quad) < 1e-12) {
    if (law.linear > 0.0) return normal_sf((threshold - law.offset) / law.linear);
    return law.offset > threshold ? 1.0 : 0.0;
  }
  // quad ||z + linear/(2 quad) e_1||^2 - linear^2 / (4 quad)
  const double base = law.offset - law.linear * law.linear / (4.0 * law.quad);
  const double noncentrality = law.linear * law.linear / (4.0 * law.quad * law.quad);
  const double y0 = (threshold - base) / law.quad;
  const double dof = static_cast<double>(law.dim);
  if (y0 <= 0.0) return law.quad > 0.0 ? 1.0 : 0.0;
  double upper = 0.0;
  if (noncentrality <= 0.0) {
    boost::math::chi_squared_distribution<double> chi(dof);
    upper = law.quad > 0.0 ? boost::math::cdf(boost::math::complement(chi, y0)) : boost::math::cdf(chi, y0);
  } else {
    boost::math::non_central_chi_squared_distribution<double> chi(dof, noncentrality);
    upper = law.quad > 0.0 ? boost::math::cdf(boost::math::complement(chi, y0)) : boost::math::cdf(chi, y0);
  }
  return std::clamp(upper, 0.0, 1.0);
}

double log_ratio_tail_exact(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                            TailMeasure measure) {
  if (!(t > 0.0)) throw ConfigError("tail threshold t must be positive");
  return log_ratio_exceedance(log_ratio_law(w, k, q, measure), kl_to_prior(w, k, q) + 0.5 * t);
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<TailEstimate> log_ratio_tail_sweep(const Hypothesis& w, const QuantKernel& k, const Prior& q,
                                               std::span<const double> ts, std::size_t m, std::uint64_t seed,
                                               TailMeasure measure) {
  for (double t : ts) {
    if (!(t > 0.0)) throw ConfigError("tail threshold t must be positive");
  }
  if (m == 0) throw ConfigError("tail estimation needs m >= 1");
  const double kl = kl_to_prior(w, k, q);
  const auto law = log_ratio_law(w, k, q, measure);
  const QuantKernel draw_kernel{measure == TailMeasure::kernel ? k.variance : q.variance};
  const std::span<const double> centre = measure == TailMeasure::kernel ? w.coords() : std::span<const double>(q.mean);

  std::vector<std::size_t> hits(ts.size(), 0);
  Rng rng(seed);
  std::vector<double> w_hat(w.dim());
  for (std::size_t i = 0; i < m; ++i) {
    sample_kernel_into(centre, draw_kernel, rng, w_hat);
    const double lr = log_density_ratio(w.coords(), w_hat, k, q);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (lr > kl + 0.5 * ts[j]) ++hits[j];
    }
  }

  std::vector<TailEstimate> out;
  out.reserve(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    TailEstimate e;
    e.t = ts[j];
    e.m = m;
    e.estimate = static_cast<double>(hits[j]) / static_cast<double>(m);
    const auto ci = wilson_interval(hits[j], m);
    e.ci_low = ci.low;
    e.ci_high = ci.high;
    e.semi_analytic = log_ratio_exceedance(law, kl + 0.5 * ts[j]);
    e.precision_warning = m < 1000;
    out.push_back(e);
  }
  return out;
}

TailEstimate log_ratio_tail(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t m,
                            std::uint64_t seed, TailMeasure measure) {
  const double ts[] = {t};
  return log_ratio_tail_sweep(w, k, q, ts, m, seed, measure).front();
}

}  // namespace mincomm
