#include <cmath>
#include <vector>

#include "doctest.h"
#include "mincomm/bounds.hpp"
#include "mincomm/error.hpp"

using namespace mincomm;

namespace {

Hypothesis offset(std::size_t d, double r) {
  std::vector<double> v(d, 0.0);
  v[0] = r;
  return Hypothesis(v);
}

Prior origin(std::size_t d, double var = 1.0) { return Prior{std::vector<double>(d, 0.0), var}; }

}  // namespace

TEST_CASE("b_W closed forms") {
  CHECK(b_w(offset(3, 0.0), QuantKernel{1.0}, origin(3), 4.0) == doctest::Approx(0.367879441171).epsilon(1e-11));
  CHECK(b_w(offset(3, 0.0), QuantKernel{1.0}, origin(3), 8.0) == doctest::Approx(0.135335283237).epsilon(1e-11));
  CHECK(b_w(offset(1, 1.0), QuantKernel{1.0}, origin(1), 2.0) == doctest::Approx(1.40316170086395).epsilon(1e-10));
  CHECK(b_from_tail(4.0, 0.25) == doctest::Approx(std::exp(-1.0) + 1.0));
}

TEST_CASE("Monte Carlo b_W agrees with the exact route") {
  const auto w = offset(8, 2.0);
  const double exact = b_w(w, QuantKernel{0.5}, origin(8), 4.0);
  const double mc = b_w_mc(w, QuantKernel{0.5}, origin(8), 4.0, 200000, 5);
  // b is 2 sqrt(p) plus a constant; propagate a 4-sigma binomial error.
  const double p = 0.105051043219341;
  const double dp = 4.0 * std::sqrt(p * (1 - p) / 200000);
  CHECK(std::abs(mc - exact) < 2.0 * (std::sqrt(p + dp) - std::sqrt(p)));
}

TEST_CASE("empirical-risk bound") {
  const double b = std::exp(-2.0);
  const auto r = emp_risk_bound_rhs(0.3, b, 4.0, 0.5, 0.0);
  CHECK(r.rhs == doctest::Approx(1.46395341373865).epsilon(1e-12));
  CHECK(r.prob_floor == doctest::Approx(1.0 - 2.0 * std::exp(-1.0)));
  CHECK_FALSE(r.vacuous);
  CHECK(emp_risk_bound_rhs(0.3, b, 4.0, 0.5, 0.5).rhs < r.rhs);
  const auto vac = emp_risk_bound_rhs(0.3, 1.2, 4.0, 0.5, 0.0);
  CHECK(vac.vacuous);
  CHECK(std::isinf(vac.rhs));

  // Same value through the model-level overload: P = Q, d = 4, t = 8.
  Dataset s(std::vector<Sample>{{{0.0, 0.0, 0.0, 0.0}, 1}});
  const auto m = emp_risk_bound_rhs(s, offset(4, 0.0), QuantKernel{1.0}, origin(4), 8.0, EncodingStats{},
                                    LossSpec::for_feature_bound(2.0));
  CHECK(m.rhs == doctest::Approx(0.5 + 2.0 * std::exp(-1.0) / (1.0 - std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("expectation bound") {
  std::vector<ModelTerm> zero(5, ModelTerm{0.0, 0.0});
  const auto e = gen_bound_expectation(zero, 4.0, 0.5, 1.0, 50, 0.05);
  CHECK(e.c_s == 0.0);
  CHECK(e.t_s == 1.0);
  CHECK(e.eps_s == 0.0);
  CHECK(e.rhs == doctest::Approx(0.252228799582579).epsilon(1e-12));
  CHECK(gen_bound_expectation(zero, 4.0, 0.5, 1e-300, 50, 1.0).rhs ==
        doctest::Approx(0.152507164693231).epsilon(1e-12));

  // t_S saturates at log(C_S + 1) + 4.
  std::vector<ModelTerm> one{{std::exp(1.0) - 1.0, 0.0}};
  CHECK(gen_bound_expectation(one, 4.0, 0.5, 10.0, 50, 0.05).t_s == doctest::Approx(5.0));

  std::vector<ModelTerm> with_b{{1.0, 0.01}, {3.0, 0.03}};
  const auto eb = gen_bound_expectation(with_b, 4.0, 0.5, 4.0, 200, 0.05);
  CHECK(eb.c_s == 2.0);
  CHECK(eb.eps_s == doctest::Approx(2 * 0.02 + 8 * std::sqrt(0.5 * 2.0 * 0.02)));
  CHECK_THROWS_AS(gen_bound_expectation({}, 4.0, 0.5, 4.0, 200, 0.05), ConfigError);
}

TEST_CASE("decoded-model bound") {
  const double v = gen_bound_decoded_rhs(0.5, 0.0, 8.0, 0.5, 1.0, 100, 0.1, PrecisionMode::none());
  CHECK(v == doctest::Approx(0.180057832365943).epsilon(1e-12));
  CHECK(gen_bound_decoded_rhs(0.5, 0.3, 8.0, 0.5, 1.0, 100, 0.1, PrecisionMode::none()) == v);
  CHECK(gen_bound_decoded_rhs(0.5, 0.0, 8.0, 0.5, 2.0, 100, 0.1, PrecisionMode::none()) > v);
  CHECK(decoded_eps_term(0.3, 8.0, 0.5, PrecisionMode::none()) == 0.0);
  CHECK(decoded_eps_term(0.0, 8.0, 0.5, PrecisionMode::quantized(8)) == 0.0);
  CHECK(decoded_eps_term(0.3, 8.0, 0.5, PrecisionMode::full()) > 0.0);
}

TEST_CASE("one-shot bound") {
  CHECK(gen_bound_oneshot_rhs(55, 100, 0.05, 1.0, 0.1) == doctest::Approx(0.387123828771037).epsilon(1e-12));
  CHECK(gen_bound_oneshot_rhs(1, 100, 1.0, 0.5, 0.3) == doctest::Approx(0.3));
  double prev = 0.0;
  for (std::uint64_t n_cw : {2, 16, 256, 4096}) {
    const double v = gen_bound_oneshot_rhs(n_cw, 100, 0.05, 0.5, 0.1);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(gen_bound_oneshot_rhs(16, 400, 0.05, 0.5, 0.1) < gen_bound_oneshot_rhs(16, 100, 0.05, 0.5, 0.1));
  CHECK(gen_bound_oneshot_rhs(16, 100, 0.05, 0.5, 0.2) > gen_bound_oneshot_rhs(16, 100, 0.05, 0.5, 0.1));
}

TEST_CASE("expected kernel distance") {
  CHECK(expected_kernel_distance(1, QuantKernel{1.0}) == doctest::Approx(0.797884560802866).epsilon(1e-12));
  CHECK(expected_kernel_distance(8, QuantKernel{0.5}) == doctest::Approx(1.93862139942791).epsilon(1e-12));
  CHECK(expected_kernel_distance(64, QuantKernel{2.0}) == doctest::Approx(11.2696023203549).epsilon(1e-12));
  CHECK(kernel_second_moment(8, QuantKernel{0.5}) == 4.0);
}

TEST_CASE("covering probability tau") {
  std::vector<Hypothesis> models{offset(2, 0.5), offset(2, -0.3), Hypothesis({0.2, 0.4})};
  const QuantKernel k{0.5};
  const auto q = origin(2);

  const auto tiny = tau_eps(models, k, q, 4096, 1e-9, TauGrid{}, 2000, 1);
  CHECK(tiny.tau == 1.0);

  const auto single = tau_eps(models, k, q, 1, 2.0, TauGrid{}, 2000, 1);
  if (single.feasible) {
    CHECK(single.n1 == 1);
    CHECK(single.n2 == 1);
    CHECK(single.tau == doctest::Approx(single.cover_term + single.gumbel_term + single.ratio_term));
  }

  const auto wide = tau_eps(models, k, q, 4096, 1e3, TauGrid{}, 2000, 1);
  REQUIRE(wide.feasible);
  CHECK(wide.cover_term == 0.0);
  CHECK(wide.tau < 0.05);
  CHECK(wide.n1 * wide.n2 <= 4096);
  CHECK(wide.tau == doctest::Approx(wide.cover_term + wide.gumbel_term + wide.ratio_term));

  const auto mid = tau_eps(models, k, q, 4096, 2.0, TauGrid{}, 2000, 1);
  CHECK(mid.tau >= wide.tau);
  CHECK(mid.tau <= 1.0);
  CHECK(tau_eps(models, k, q, 4096, 2.0, TauGrid{}, 2000, 1).tau == mid.tau);
}

TEST_CASE("codebook concentration under P = Q") {
  const auto d = appendix_claim_check(offset(2, 0.0), QuantKernel{1.0}, origin(2), 4.0, 200, 3);
  CHECK(d.kl == 0.0);
  CHECK(d.b == doctest::Approx(std::exp(-1.0)));
  CHECK(d.n_codewords == static_cast<std::uint64_t>(std::ceil(std::exp(4.0))));
  CHECK(d.p_ratio_above_a == 0.0);
  CHECK(d.clip_codebook_term == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.weight_deviation_freq == 0.0);
  CHECK(d.mean_abs_gap < d.bound);
  CHECK_FALSE(d.report.violated);
  CHECK(d.i_w == doctest::Approx(expected_kernel_distance(2, QuantKernel{1.0})));
}

TEST_CASE("codebook concentration with an informative kernel") {
  const auto d = appendix_claim_check(offset(2, 1.0), QuantKernel{0.5}, origin(2), 6.0, 300, 4);
  CHECK(d.mean_abs_gap <= d.bound);
  CHECK(d.clip_term_bound >= 0.0);
  CHECK(d.weight_deviation_freq <= d.weight_deviation_bound);
  CHECK(std::abs(d.i_w_mc - d.i_w) < 0.02 * d.i_w);
}

TEST_CASE("bound config validation and names") {
  BoundConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_tail_measure(to_string(TailMeasure::prior)) == TailMeasure::prior);
  CHECK(parse_ratio_scale(to_string(RatioScale::linear)) == RatioScale::linear);
  CHECK_THROWS_AS(parse_ratio_scale("cubic"), ConfigError);
  const auto r = make_report("x", 0.5, 0.6, 0.55, 0.65, 0.05);
  CHECK(r.violated);
  CHECK_FALSE(make_report("x", 0.5, 0.6, 0.55, 0.65, 0.05, true).violated);
  CHECK_FALSE(make_report("x", 0.5, 0.54, 0.5, 0.6, 0.05).violated);
}
