#include "mincomm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mincomm/error.hpp"
#include "mincomm/parallel.hpp"

namespace mincomm {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void check_n_delta(std::size_t n, double delta) {
  if (n == 0) throw ConfigError("sample size n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
}

}  // namespace

std::string to_string(TailMeasure m) { return m == TailMeasure::kernel ? "kernel" : "prior"; }

TailMeasure parse_tail_measure(const std::string& text) {
  if (text == "kernel") return TailMeasure::kernel;
  if (text == "prior") return TailMeasure::prior;
  throw ConfigError("unknown tail measure: " + text);
}

std::string to_string(RatioScale s) { return s == RatioScale::log ? "log" : "linear"; }

RatioScale parse_ratio_scale(const std::string& text) {
  if (text == "log") return RatioScale::log;
  if (text == "linear") return RatioScale::linear;
  throw ConfigError("unknown ratio scale: " + text);
}

void BoundConfig::validate() const {
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (n == 0) throw ConfigError("n must be positive");
  if (!(lipschitz > 0.0)) throw ConfigError("lipschitz constant must be positive");
  if (mc_samples == 0) throw ConfigError("mc_samples must be positive");
  if (!(epsilon_vq > 0.0)) throw ConfigError("epsilon_vq must be positive");
  if (n_vq == 0) throw ConfigError("n_vq must be positive");
}

BoundReport make_report(std::string name, double rhs, double lhs, double ci_low, double ci_high, double allowance,
                        bool vacuous) {
  BoundReport r;
  r.name = std::move(name);
  r.rhs = rhs;
  r.lhs = lhs;
  r.ci_low = ci_low;
  r.ci_high = ci_high;
  r.vacuous = vacuous;
  r.violated = !vacuous && lhs > rhs + allowance;
  return r;
}

double b_from_tail(double t, double tail) {
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  if (!(tail >= 0.0 && tail <= 1.0)) throw NumericError("tail probability outside [0, 1]");
  return std::exp(-0.25 * t) + 2.0 * std::sqrt(tail);
}

double b_w(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, TailMeasure measure) {
  return b_from_tail(t, log_ratio_tail_exact(w, k, q, t, measure));
}

double b_w_mc(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t m, std::uint64_t seed,
              TailMeasure measure) {
  return b_from_tail(t, log_ratio_tail(w, k, q, t, m, seed, measure).estimate);
}

double kernel_second_moment(std::size_t dim, const QuantKernel& k) {
  if (!(k.variance >= 0.0)) throw DegenerateKernelError("kernel variance must be non-negative");
  return static_cast<double>(dim) * k.variance;
}

EmpRiskBound emp_risk_bound_rhs(double emp_risk, double b, double second_moment, double lipschitz,
                                double mean_delta_u) {
  if (!(b >= 0.0)) throw NumericError("b_W must be non-negative");
  EmpRiskBound out;
  out.b = b;
  out.prob_floor = 1.0 - 2.0 * std::sqrt(b);
  const double denom = 1.0 - std::sqrt(b);
  if (b >= 1.0 || denom <= 0.0) {
    out.vacuous = true;
    out.rhs = std::numeric_limits<double>::infinity();
    return out;
  }
  out.rhs = emp_risk + (2.0 * lipschitz * std::sqrt(second_moment * b) - lipschitz * mean_delta_u) / denom;
  return out;
}

EmpRiskBound emp_risk_bound_rhs(const Dataset& s, const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                                const EncodingStats& stats, const LossSpec& spec, TailMeasure measure) {
  return emp_risk_bound_rhs(empirical_risk(s, w, spec), b_w(w, k, q, t, measure), kernel_second_moment(w.dim(), k),
                            spec.lipschitz_const, stats.mean_delta_u);
}

ExpectationBound gen_bound_expectation(std::span<const ModelTerm> models, double second_moment, double lipschitz,
                                       double t, std::size_t n, double delta) {
  check_n_delta(n, delta);
  if (models.empty()) throw ConfigError("at least one model is required");
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  ExpectationBound out;
  double mean_b = 0.0;
  for (const auto& m : models) {
    out.c_s += m.kl;
    mean_b += m.b;
  }
  out.c_s /= static_cast<double>(models.size());
  mean_b /= static_cast<double>(models.size());
  out.t_s = std::min(t, std::log(out.c_s + 1.0) + 4.0);
  out.eps_s = 2.0 * mean_b + 8.0 * std::sqrt(lipschitz * std::sqrt(second_moment) * mean_b);
  const double nn = static_cast<double>(n);
  out.rhs = std::sqrt((out.c_s + out.t_s + std::log(std::sqrt(2.0 * nn) / delta)) / (2.0 * nn - 1.0) + out.eps_s);
  return out;
}

double gen_bound_expectation_rhs(std::span<const Hypothesis> models, const QuantKernel& k, const Prior& q, double t,
                                 std::size_t n, double delta, double lipschitz, TailMeasure measure) {
  if (models.empty()) throw ConfigError("at least one model is required");
  std::vector<ModelTerm> terms;
  terms.reserve(models.size());
  for (const auto& w : models) terms.push_back({kl_to_prior(w, k, q), b_w(w, k, q, t, measure)});
  return gen_bound_expectation(terms, kernel_second_moment(models.front().dim(), k), lipschitz, t, n, delta).rhs;
}

double decoded_eps_term(double b, double second_moment, double lipschitz, PrecisionMode mode) {
  if (mode.kind == PrecisionMode::Kind::none) return 0.0;
  return 2.0 * b + 8.0 * std::sqrt(lipschitz * std::sqrt(second_moment) * b);
}

double gen_bound_decoded_rhs(double kl, double b, double second_moment, double lipschitz, double t, std::size_t n,
                             double delta, PrecisionMode mode) {
  check_n_delta(n, delta);
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  const double nn = static_cast<double>(n);
  const double eps = decoded_eps_term(b, second_moment, lipschitz, mode);
  return std::sqrt((kl + t + std::log(std::sqrt(2.0 * nn) / delta)) / (2.0 * nn - 1.0) + eps);
}

double gen_bound_decoded_rhs(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t n,
                             double delta, PrecisionMode mode, double lipschitz, TailMeasure measure) {
  const double b = mode.kind == PrecisionMode::Kind::none ? 0.0 : b_w(w, k, q, t, measure);
  return gen_bound_decoded_rhs(kl_to_prior(w, k, q), b, kernel_second_moment(w.dim(), k), lipschitz, t, n, delta,
                               mode);
}

double gen_bound_oneshot_rhs(std::uint64_t n_codewords, std::size_t n, double delta, double lipschitz, double eps) {
  if (n_codewords == 0) throw ConfigError("N must be >= 1");
  check_n_delta(n, delta);
  if (!(eps >= 0.0)) throw ConfigError("epsilon must be non-negative");
  const double ln_n = std::log(static_cast<double>(n_codewords));
  return std::sqrt((ln_n + std::log(1.0 / delta)) / (2.0 * static_cast<double>(n))) + 2.0 * lipschitz * eps;
}

TauResult tau_eps(std::span<const Hypothesis> models, const QuantKernel& k, const Prior& q, std::uint64_t n_codewords,
                  double eps, const TauGrid& grid, std::size_t m, std::uint64_t seed, RatioScale scale) {
  if (n_codewords == 0) throw ConfigError("N must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  if (grid.gammas.empty()) throw ConfigError("gamma grid is empty");
  if (models.empty()) throw ConfigError("tau_eps needs at least one model draw");
  if (m == 0) throw ConfigError("tau_eps needs m >= 1");
  for (double g : grid.gammas)
    if (!(g > 0.0)) throw ConfigError("gamma values must be positive");

  const std::size_t d = models.front().dim();
  const std::size_t nw = models.size();
  // Per model: kernel-draw distances and log ratios.
  std::vector<double> dist(nw * m), logr(nw * m), lambda(nw);
  std::vector<double> what(d);
  for (std::size_t i = 0; i < nw; ++i) {
    Rng rng(derive_seed(seed, i, "tau-kernel"));
    std::size_t outside = 0;
    for (std::size_t s = 0; s < m; ++s) {
      sample_kernel_into(models[i].coords(), k, rng, what);
      dist[i * m + s] = distance(models[i].coords(), what);
      logr[i * m + s] = log_density_ratio(models[i].coords(), what, k, q);
      if (dist[i * m + s] > eps) ++outside;
    }
    lambda[i] = static_cast<double>(outside) / static_cast<double>(m);
  }

  std::vector<std::uint64_t> n1_values = grid.n1_values;
  if (n1_values.empty()) {
    for (std::uint64_t v = 1; v <= n_codewords; v *= 2) {
      n1_values.push_back(v);
      if (v > n_codewords / 2) break;
    }
    if (n1_values.back() != n_codewords) n1_values.push_back(n_codewords);
  }

  constexpr double kConditionFrequency = 1.0 - 1e-3;
  TauResult best;
  std::vector<double> p_not_i(nw), p_not_fi(nw);
  for (double gamma : grid.gammas) {
    const double gumbel_unit = std::exp(-std::exp(gamma));
    const double cond_c_gumbel = std::exp(-std::exp(-gamma));
    for (std::uint64_t n1 : n1_values) {
      if (n1 == 0 || n1 > n_codewords) continue;
      const double level = std::log(static_cast<double>(n1)) - gamma;
      for (std::size_t i = 0; i < nw; ++i) {
        std::size_t not_i = 0, not_fi = 0;
        for (std::size_t s = 0; s < m; ++s) {
          const double lr = logr[i * m + s];
          const bool in_i = scale == RatioScale::log ? lr <= level : lr <= std::log(std::max(level, 0.0));
          if (!in_i) ++not_i;
          if (!in_i || dist[i * m + s] > eps) ++not_fi;
        }
        p_not_i[i] = static_cast<double>(not_i) / static_cast<double>(m);
        p_not_fi[i] = static_cast<double>(not_fi) / static_cast<double>(m);
      }
      const double ratio_unit = mean_of(p_not_i);
      std::size_t cond_c_ok = 0;
      for (std::size_t i = 0; i < nw; ++i)
        if (p_not_fi[i] + cond_c_gumbel <= 1.0) ++cond_c_ok;
      const double cond_c_freq = static_cast<double>(cond_c_ok) / static_cast<double>(nw);

      const std::uint64_t n2_max = n_codewords / n1;
      std::vector<std::uint64_t> n2_values;
      for (std::uint64_t v = 1; v <= n2_max; v *= 2) {
        n2_values.push_back(v);
        if (v > n2_max / 2) break;
      }
      if (n2_values.empty() || n2_values.back() != n2_max) n2_values.push_back(n2_max);

      for (std::uint64_t n2 : n2_values) {
        if (n2 == 0 || n1 * n2 > n_codewords) continue;  // condition (a)
        // Condition (b), read as non-strict so that N2 = 1 stays admissible.
        std::size_t cond_b_ok = 0;
        double cover = 0.0;
        const double n2d = static_cast<double>(n2);
        for (std::size_t i = 0; i < nw; ++i) {
          const double pw = std::pow(lambda[i], n2d);
          if (1.0 <= pw + n2d * (1.0 - lambda[i]) + 1e-12) ++cond_b_ok;
          cover += pw;
        }
        cover /= static_cast<double>(nw);
        const double cond_b_freq = static_cast<double>(cond_b_ok) / static_cast<double>(nw);
        if (cond_b_freq < kConditionFrequency || cond_c_freq < kConditionFrequency) continue;
        ++best.admissible_points;
        const double total = cover + n2d * gumbel_unit + n2d * ratio_unit;
        if (!best.feasible || total < best.tau) {
          best.feasible = true;
          best.tau = total;
          best.gamma = gamma;
          best.n1 = n1;
          best.n2 = n2;
          best.cover_term = cover;
          best.gumbel_term = n2d * gumbel_unit;
          best.ratio_term = n2d * ratio_unit;
          best.condition_c_gumbel = cond_c_gumbel;
          best.condition_c_fraction = cond_c_freq;
        }
      }
    }
  }
  if (!best.feasible) {
    best.tau = 1.0;
    return best;
  }
  best.tau = std::clamp(best.tau, 0.0, 1.0);
  return best;
}

double expected_kernel_distance(std::size_t dim, const QuantKernel& k) {
  if (dim == 0) throw ConfigError("dimension must be > 0");
  if (!(k.variance >= 0.0)) throw DegenerateKernelError("kernel variance must be non-negative");
  const double d = static_cast<double>(dim);
  return std::sqrt(2.0 * k.variance) * std::exp(std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
}

AppendixDiagnostics appendix_claim_check(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                                         std::size_t trials, std::uint64_t seed, std::uint64_t cap,
                                         std::size_t reference_samples, std::size_t threads) {
  if (trials == 0) throw ConfigError("appendix check needs at least one codebook");
  if (reference_samples == 0) throw ConfigError("appendix check needs reference samples");
  AppendixDiagnostics out;
  const std::size_t d = w.dim();
  out.trials = trials;
  out.kl = kl_to_prior(w, k, q);
  out.n_codewords = orc_candidate_count(out.kl, t, cap);
  out.b = b_w(w, k, q, t);
  out.sigma0 = std::sqrt(kernel_second_moment(d, k));
  out.i_w = expected_kernel_distance(d, k);
  out.a_threshold = std::exp(out.kl + 0.5 * t);
  const double log_a = out.kl + 0.5 * t;

  // Reference expectations under the kernel.
  {
    Rng rng(derive_seed(seed, 0, "appendix-reference"));
    std::vector<double> what(d);
    double sum_dist = 0.0, sum_tail = 0.0;
    std::size_t above = 0;
    for (std::size_t s = 0; s < reference_samples; ++s) {
      sample_kernel_into(w.coords(), k, rng, what);
      const double dist = distance(w.coords(), what);
      sum_dist += dist;
      if (log_density_ratio(w.coords(), what, k, q) > log_a) {
        ++above;
        sum_tail += dist;
      }
    }
    const double m = static_cast<double>(reference_samples);
    out.i_w_mc = sum_dist / m;
    out.p_ratio_above_a = static_cast<double>(above) / m;
    out.clip_mean_term = sum_tail / m;
  }
  // E_P[||w - W_hat||_{-a}], the mean of the clipped codebook average.
  const double clipped_mean = out.i_w - out.clip_mean_term;

  std::vector<double> gap(trials), clip_gap(trials), remainder(trials), weight_dev(trials);
  const std::uint64_t n = out.n_codewords;
  const double sqrt_b = std::sqrt(out.b);
  parallel_for(trials, threads, [&](std::size_t u) {
    const SharedRandomness rand{derive_seed(seed, u, "appendix-codebook")};
    std::vector<double> cw(d);
    double sum_weighted = 0.0, sum_clipped = 0.0, sum_rho = 0.0;
    for (std::uint64_t j = 1; j <= n; ++j) {
      derive_codeword_into(rand, j, q, cw);
      const double dist = distance(w.coords(), cw);
      const double lr = log_density_ratio(w.coords(), cw, k, q);
      const double rho = std::exp(lr);
      sum_weighted += dist * rho;
      if (lr <= log_a) sum_clipped += dist * rho;
      sum_rho += rho;
    }
    const double nn = static_cast<double>(n);
    const double i_n = sum_weighted / nn;
    const double clipped = sum_clipped / nn;
    gap[u] = std::abs(i_n - out.i_w);
    clip_gap[u] = std::abs(i_n - clipped);
    remainder[u] = std::abs(clipped - clipped_mean);
    weight_dev[u] = std::abs(sum_rho / nn - 1.0) > sqrt_b ? 1.0 : 0.0;
  });

  out.mean_abs_gap = mean_of(gap);
  out.gap_std_error = std_error_of(gap, out.mean_abs_gap);
  out.bound = out.sigma0 * out.b;
  out.clip_codebook_term = mean_of(clip_gap);
  out.remainder_term = mean_of(remainder);
  out.clip_term_bound = out.sigma0 * std::sqrt(out.p_ratio_above_a);
  out.remainder_bound = std::sqrt(out.a_threshold * out.sigma0 * out.sigma0 / static_cast<double>(n));
  out.weight_deviation_freq = mean_of(weight_dev);
  out.weight_deviation_bound = sqrt_b;
  const double half = 1.959963984540054 * out.gap_std_error;
  out.report = make_report("appendix_concentration", out.bound, out.mean_abs_gap, out.mean_abs_gap - half,
                           out.mean_abs_gap + half, 0.0);
  return out;
}

}  // namespace mincomm
