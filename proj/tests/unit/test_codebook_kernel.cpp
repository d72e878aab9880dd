#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "mincomm/codebook.hpp"
#include "mincomm/error.hpp"
#include "mincomm/kernel.hpp"

using namespace mincomm;

namespace {

// Two-sided Kolmogorov limiting distribution at 1% is 1.628 / sqrt(n).
double ks_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST_CASE("codewords are deterministic and randomly accessible") {
  Prior q{{0.5, -1.0, 2.0}, 2.0};
  SharedRandomness r{77};
  Codebook cb(q, r);
  const auto c5 = cb.codeword(5);
  CHECK(derive_codeword(r, 5, q) == c5);
  // Access order does not matter.
  for (std::uint64_t j = 10; j >= 1; --j) cb.codeword(j);
  CHECK(cb.codeword(5) == c5);
  CHECK(cb.codeword(5) != cb.codeword(6));
  CHECK(Codebook(q, SharedRandomness{78}).codeword(5) != c5);

  const auto list = materialize(cb, 8);
  REQUIRE(list.size() == 8);
  CHECK(list[0] == derive_codeword(r, 1, q));
  CHECK(materialize(Codebook(q, r), 8) == list);
  CHECK(materialize(cb, 1).front() == cb.codeword(1));
}

TEST_CASE("codebook index and prior validation") {
  Prior q{{0.0}, 1.0};
  Codebook bounded(q, SharedRandomness{1}, 4);
  CHECK_THROWS_AS(bounded.codeword(0), ConfigError);
  CHECK_THROWS_AS(bounded.codeword(5), ConfigError);
  CHECK_NOTHROW(bounded.codeword(4));
  CHECK_THROWS_AS(materialize(bounded, 0), ConfigError);
  CHECK_THROWS_AS(Codebook(Prior{{0.0}, -1.0}, SharedRandomness{}), ConfigError);
  CHECK_THROWS_AS(Codebook(Prior{{NAN}, 1.0}, SharedRandomness{}), ConfigError);
}

TEST_CASE("zero prior variance collapses the codebook to the mean") {
  Prior q{{1.5, -2.0}, 0.0};
  for (std::uint64_t j = 1; j <= 5; ++j) CHECK(derive_codeword(SharedRandomness{3}, j, q) == Hypothesis({1.5, -2.0}));
}

TEST_CASE("codeword coordinates follow the prior") {
  Prior q{{0.0, 0.0}, 1.0};
  SharedRandomness r{2024};
  const std::size_t n = 100000;
  std::vector<double> xs, ys;
  std::vector<double> buf(2);
  for (std::uint64_t j = 1; j <= n; ++j) {
    derive_codeword_into(r, j, q, buf);
    xs.push_back(buf[0]);
    ys.push_back(buf[1]);
  }
  for (const auto* v : {&xs, &ys}) {
    double s = 0, s2 = 0;
    for (double x : *v) {
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(s2 / n - mean * mean - 1.0) < 0.05);
    CHECK(ks_normal(*v) < 1.628 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("log density ratio closed forms") {
  QuantKernel k{1.0};
  Prior q{{0.0}, 1.0};
  CHECK(log_density_ratio(Hypothesis({1.0}), Hypothesis({1.0}), k, q) == doctest::Approx(0.5));
  Prior q2{{0.3, -0.2}, 1.0};
  Hypothesis mu({0.3, -0.2});
  CHECK(log_density_ratio(mu, Hypothesis({4.0, 1.0}), k, q2) == doctest::Approx(0.0));
  CHECK(kl_to_prior(mu, k, q2) == 0.0);
  CHECK(kl_to_prior(Hypothesis({1.3, -0.2}), k, q2) == doctest::Approx(0.5));
  Prior q8{std::vector<double>(8, 0.0), 1.0};
  std::vector<double> w8(8, 0.0);
  w8[0] = 2.0;
  CHECK(kl_to_prior(Hypothesis(w8), QuantKernel{0.5}, q8) == doctest::Approx(2.77258872223978));
  CHECK_THROWS_AS(log_density_ratio(Hypothesis({1.0}), Hypothesis({1.0}), QuantKernel{0.0}, q), DegenerateKernelError);
  CHECK_THROWS_AS(kl_to_prior(Hypothesis({1.0, 2.0}), k, q), ConfigError);
}

TEST_CASE("sup of the log ratio") {
  Prior q{{0.0, 0.0}, 1.0};
  CHECK_FALSE(max_log_density_ratio(Hypothesis({1.0, 0.0}), QuantKernel{1.0}, q).has_value());
  const auto sup = max_log_density_ratio(Hypothesis({1.0, 0.0}), QuantKernel{0.5}, q);
  REQUIRE(sup.has_value());
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    Hypothesis wh({3.0 * rng.normal(), 3.0 * rng.normal()});
    CHECK(log_density_ratio(Hypothesis({1.0, 0.0}), wh, QuantKernel{0.5}, q) <= *sup + 1e-12);
  }
}

TEST_CASE("KL and change of measure by Monte Carlo") {
  QuantKernel k{0.7};
  Prior q{{0.0, 0.0, 0.0}, 1.3};
  Hypothesis w({0.8, -0.4, 1.1});
  const std::size_t m = 100000;
  Rng rng(17);
  std::vector<double> buf(3);
  double s = 0, s2 = 0, f = 0, f2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sample_kernel_into(w.coords(), k, rng, buf);
    const double l = log_density_ratio(w.coords(), buf, k, q);
    s += l;
    s2 += l * l;
    const double g = std::exp(-l) * buf[0];
    f += g;
    f2 += g * g;
  }
  const double mean = s / m, se = std::sqrt((s2 / m - mean * mean) / m);
  CHECK(std::abs(mean - kl_to_prior(w, k, q)) < 3.0 * se);
  const double fm = f / m, fse = std::sqrt((f2 / m - fm * fm) / m);
  CHECK(std::abs(fm - 0.0) < 3.0 * fse);
}

TEST_CASE("kernel sampling") {
  Hypothesis w({1.0, -2.0});
  CHECK(sample_kernel(w, QuantKernel{0.0}, 4) == w);
  CHECK(sample_kernel(w, QuantKernel{1.0}, 4) == sample_kernel(w, QuantKernel{1.0}, 4));
  CHECK(sample_kernel(w, QuantKernel{1.0}, 4) != sample_kernel(w, QuantKernel{1.0}, 5));
  const double var = 0.6;
  Rng rng(8);
  std::vector<double> buf(2);
  const std::size_t m = 100000;
  double s0 = 0, s1 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sample_kernel_into(w.coords(), QuantKernel{var}, rng, buf);
    s0 += buf[0];
    s1 += buf[1];
  }
  const double tol = 4.0 * std::sqrt(var / m);
  CHECK(std::abs(s0 / m - 1.0) < tol);
  CHECK(std::abs(s1 / m + 2.0) < tol);
}

TEST_CASE("exact log-ratio tails") {
  // P = Q: ratio identically one.
  Prior q1{{0.0}, 1.0};
  CHECK(log_ratio_tail_exact(Hypothesis({0.0}), QuantKernel{1.0}, q1, 4.0) == 0.0);
  // d = 1, equal variances, unit offset: log ratio = 0.5 + z, threshold 0.5 + t/2.
  CHECK(log_ratio_tail_exact(Hypothesis({1.0}), QuantKernel{1.0}, q1, 2.0) ==
        doctest::Approx(0.158655253931457).epsilon(1e-10));

  Prior q8{std::vector<double>(8, 0.0), 1.0};
  std::vector<double> w8(8, 0.0);
  w8[3] = 2.0;
  Hypothesis w(w8);
  QuantKernel k{0.5};
  CHECK(log_ratio_tail_exact(w, k, q8, 2.0) == doctest::Approx(0.311975077012054).epsilon(1e-8));
  CHECK(log_ratio_tail_exact(w, k, q8, 4.0) == doctest::Approx(0.105051043219341).epsilon(1e-8));
  CHECK(log_ratio_tail_exact(w, k, q8, 2.0, TailMeasure::prior) ==
        doctest::Approx(0.00369193298039528).epsilon(1e-7));
  CHECK(log_ratio_tail_exact(w, k, q8, 4.0, TailMeasure::prior) ==
        doctest::Approx(0.00058842620473774).epsilon(1e-7));
}

TEST_CASE("Monte Carlo tail agrees with the exact tail and is monotone in t") {
  Prior q1{{0.0}, 1.0};
  const auto est = log_ratio_tail(Hypothesis({1.0}), QuantKernel{1.0}, q1, 2.0, 100000, 3);
  const double se = std::sqrt(est.semi_analytic * (1 - est.semi_analytic) / est.m);
  CHECK(std::abs(est.estimate - est.semi_analytic) < 3.0 * se);
  CHECK(est.ci_low <= est.estimate);
  CHECK(est.ci_high >= est.estimate);
  CHECK_FALSE(est.precision_warning);
  CHECK(log_ratio_tail(Hypothesis({1.0}), QuantKernel{1.0}, q1, 2.0, 500, 3).precision_warning);

  Prior q4{std::vector<double>(4, 0.0), 1.0};
  const std::vector<double> ts{1, 2, 4, 8};
  const auto sweep = log_ratio_tail_sweep(Hypothesis({1.0, 0.5, 0.0, -0.5}), QuantKernel{0.5}, q4, ts, 20000, 9);
  REQUIRE(sweep.size() == 4);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(sweep[i].estimate <= sweep[i - 1].estimate);
    CHECK(sweep[i].semi_analytic <= sweep[i - 1].semi_analytic);
  }
}

TEST_CASE("Wilson interval") {
  const auto iv = wilson_interval(7, 50);
  CHECK(iv.low == doctest::Approx(0.0695083342701629).epsilon(1e-10));
  CHECK(iv.high == doctest::Approx(0.261861937105855).epsilon(1e-10));
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.low < 1e-15);
  CHECK(zero.high > 0.0);
}
