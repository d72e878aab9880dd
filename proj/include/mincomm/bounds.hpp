#pragma once

// Numerical evaluation of the risk, generalization and covering bounds for
// the coded model, and the codebook concentration checker.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mincomm/codebook.hpp"
#include "mincomm/encoders.hpp"
#include "mincomm/hypothesis.hpp"
#include "mincomm/kernel.hpp"

namespace mincomm {

/// How the covering set compares the density ratio with log(N1) - gamma.
enum class RatioScale { log, linear };

std::string to_string(TailMeasure m);
TailMeasure parse_tail_measure(const std::string& text);
std::string to_string(RatioScale s);
RatioScale parse_ratio_scale(const std::string& text);

struct BoundConfig {
  double t = 4.0;
  double delta = 0.05;
  std::size_t n = 200;
  double lipschitz = 0.5;
  std::size_t mc_samples = 10000;
  double epsilon_vq = 2.5;
  std::uint64_t n_vq = 4096;
  TailMeasure tail_measure = TailMeasure::kernel;
  RatioScale ratio_scale = RatioScale::log;

  void validate() const;
};

struct BoundReport {
  std::string name;
  double rhs = 0.0;
  double lhs = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool violated = false;
  bool vacuous = false;
};

/// violated iff lhs > rhs + allowance; vacuous reports never count as violated.
BoundReport make_report(std::string name, double rhs, double lhs, double ci_low, double ci_high, double allowance,
                        bool vacuous = false);

/// e^{-t/4} + 2 sqrt(tail).
double b_from_tail(double t, double tail);

/// b_W with the exact log-ratio tail.
double b_w(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
           TailMeasure measure = TailMeasure::kernel);

/// b_W with a Monte Carlo tail (independent route, for cross-checks).
double b_w_mc(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t m, std::uint64_t seed,
              TailMeasure measure = TailMeasure::kernel);

/// E ||W - W_hat||^2 under the isotropic kernel, d * variance.
double kernel_second_moment(std::size_t dim, const QuantKernel& k);

struct EmpRiskBound {
  double rhs = 0.0;
  /// 1 - 2 sqrt(b); the bound holds at least with this probability.
  double prob_floor = 0.0;
  double b = 0.0;
  bool vacuous = false;
};

/// emp_risk + (2 L sqrt(second_moment * b) - L mean_delta_u) / (1 - sqrt b).
EmpRiskBound emp_risk_bound_rhs(double emp_risk, double b, double second_moment, double lipschitz,
                                double mean_delta_u);

struct EncodingStats {
  /// Mean of Delta_U over encoder draws.
  double mean_delta_u = 0.0;
};

EmpRiskBound emp_risk_bound_rhs(const Dataset& s, const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                                const EncodingStats& stats, const LossSpec& spec,
                                TailMeasure measure = TailMeasure::kernel);

struct ModelTerm {
  double kl = 0.0;
  double b = 0.0;
};

struct ExpectationBound {
  double c_s = 0.0;
  double t_s = 0.0;
  double eps_s = 0.0;
  double rhs = 0.0;
};

/// sqrt((C_S + t_S + log(sqrt(2n)/delta)) / (2n - 1) + eps_S) with
/// C_S = mean kl, t_S = min(t, log(C_S + 1) + 4) and
/// eps_S = 2 mean(b) + 8 sqrt(L * sqrt(second_moment) * mean(b)).
ExpectationBound gen_bound_expectation(std::span<const ModelTerm> models, double second_moment, double lipschitz,
                                       double t, std::size_t n, double delta);

double gen_bound_expectation_rhs(std::span<const Hypothesis> models, const QuantKernel& k, const Prior& q, double t,
                                 std::size_t n, double delta, double lipschitz,
                                 TailMeasure measure = TailMeasure::kernel);

/// Single-model bound sqrt((KL + t + log(sqrt(2n)/delta)) / (2n - 1) + eps);
/// eps = 0 without precision, else the one-model plug-in of eps_S.
double gen_bound_decoded_rhs(double kl, double b, double second_moment, double lipschitz, double t, std::size_t n,
                             double delta, PrecisionMode mode);
double gen_bound_decoded_rhs(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t, std::size_t n,
                             double delta, PrecisionMode mode, double lipschitz,
                             TailMeasure measure = TailMeasure::kernel);
/// The eps term alone.
double decoded_eps_term(double b, double second_moment, double lipschitz, PrecisionMode mode);

/// sqrt((log N + log(1/delta)) / (2n)) + 2 L eps.
double gen_bound_oneshot_rhs(std::uint64_t n_codewords, std::size_t n, double delta, double lipschitz, double eps);

struct TauGrid {
  std::vector<double> gammas{0.5, 1.0, 2.0, 4.0};
  /// Empty: all powers of two up to N (and N itself).
  std::vector<std::uint64_t> n1_values;
};

struct TauResult {
  double tau = 1.0;
  bool feasible = false;
  double gamma = 0.0;
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  double cover_term = 1.0;    // E_W[P(not in F_eps | W)^N2]
  double gumbel_term = 0.0;   // N2 exp(-exp(gamma)), as in the tau definition
  double ratio_term = 0.0;    // N2 P(not in I_{N1,gamma})
  double condition_c_gumbel = 0.0;  // exp(-exp(-gamma)) from condition (c)
  double condition_c_fraction = 0.0;
  std::size_t admissible_points = 0;
};

/// Grid search for the covering failure probability tau_eps. `models` are
/// draws of W; each gets `m` kernel draws. Condition (c) must hold for at
/// least 1 - 1e-3 of the sampled W.
TauResult tau_eps(std::span<const Hypothesis> models, const QuantKernel& k, const Prior& q, std::uint64_t n_codewords,
                  double eps, const TauGrid& grid, std::size_t m, std::uint64_t seed,
                  RatioScale scale = RatioScale::log);

/// E ||w - W_hat|| for W_hat ~ N(w, variance I): sigma sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
double expected_kernel_distance(std::size_t dim, const QuantKernel& k);

struct AppendixDiagnostics {
  std::uint64_t n_codewords = 0;
  std::size_t trials = 0;
  double kl = 0.0;
  double i_w = 0.0;          // closed form
  double i_w_mc = 0.0;       // Monte Carlo cross-check
  double sigma0 = 0.0;
  double b = 0.0;
  double a_threshold = 0.0;
  double mean_abs_gap = 0.0;     // E_U |I_N - I|
  double gap_std_error = 0.0;
  double bound = 0.0;            // sigma0 * b
  double p_ratio_above_a = 0.0;  // P(rho > a) under the kernel, MC
  double clip_codebook_term = 0.0;   // E_U |I_N - clipped mean|
  double clip_mean_term = 0.0;       // |E[||.||_{-a}] - I|
  double remainder_term = 0.0;       // E_U |B|
  double clip_term_bound = 0.0;      // sigma0 sqrt(P(rho > a))
  double remainder_bound = 0.0;      // sqrt(a sigma0^2 / N)
  double weight_deviation_freq = 0.0;  // P(|mean rho - 1| > sqrt b)
  double weight_deviation_bound = 0.0;  // sqrt b
  BoundReport report;
};

/// Concentration of the importance-weighted codebook distance around its
/// mean, over `trials` independent codebooks of size ceil(exp(KL + t)).
AppendixDiagnostics appendix_claim_check(const Hypothesis& w, const QuantKernel& k, const Prior& q, double t,
                                         std::size_t trials, std::uint64_t seed,
                                         std::uint64_t cap = kDefaultOrcCap, std::size_t reference_samples = 200000,
                                         std::size_t threads = 1);

}  // namespace mincomm
