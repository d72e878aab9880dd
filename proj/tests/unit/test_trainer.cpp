#include <cmath>
#include <vector>

#include "doctest.h"
#include "mincomm/error.hpp"
#include "mincomm/trainer.hpp"

using namespace mincomm;

TEST_CASE("synthetic task determinism and label noise") {
  auto [s1, t1] = make_synthetic_task(5, 100, 0.1, 42);
  auto [s2, t2] = make_synthetic_task(5, 100, 0.1, 42);
  CHECK(s1 == s2);
  CHECK(t1.true_w() == t2.true_w());
  CHECK(norm(t1.true_w().coords()) == doctest::Approx(3.0));
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(norm(s1[i].x) <= 2.0 + 1e-12);

  auto clean = SyntheticTask::make(6, 0.0, 7);
  const auto s = clean.sample_dataset(2000, 1);
  const LossSpec spec = clean.loss_spec();
  CHECK(empirical_risk(s, clean.true_w(), spec) < empirical_risk(s, Hypothesis::zeros(6), spec));

  auto noise = SyntheticTask::make(6, 0.5, 7);
  const auto est = population_risk_mc(noise, noise.true_w(), 50000, 3, spec);
  CHECK(std::abs(est.mean - 0.5) < 4.0 * est.std_error + 1e-3);
  CHECK_THROWS_AS(SyntheticTask::make(6, 0.7, 7), ConfigError);
}

TEST_CASE("objective gradient matches finite differences") {
  auto [s, task] = make_synthetic_task(4, 60, 0.1, 3);
  const Prior q{{0.1, -0.2, 0.0, 0.3}, 1.5};
  const QuantKernel k{0.5};
  const LossSpec spec = task.loss_spec();
  Rng rng(4);
  for (int probe = 0; probe < 20; ++probe) {
    std::vector<double> w(4);
    for (auto& v : w) v = rng.normal();
    std::vector<double> g(4);
    objective_gradient(s, {}, w, 0.2, q, g);
    for (std::size_t i = 0; i < 4; ++i) {
      const double h = 1e-5;
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (training_objective(s, wp, 0.2, q, k, spec) - training_objective(s, wm, 0.2, q, k, spec)) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("loss is Lipschitz with constant B/4") {
  const LossSpec spec = LossSpec::for_feature_bound(2.0);
  auto task = SyntheticTask::make(3, 0.1, 5);
  Rng rng(6);
  std::vector<double> x(3);
  for (int i = 0; i < 10000; ++i) {
    std::uint8_t y = 0;
    task.draw(rng, x, y);
    std::vector<double> a(3), b(3);
    for (std::size_t j = 0; j < 3; ++j) {
      a[j] = 3.0 * rng.normal();
      b[j] = a[j] + 0.5 * rng.normal();
    }
    const double gap = std::abs(loss(x, y, a, spec) - loss(x, y, b, spec));
    REQUIRE(gap <= spec.lipschitz_const * distance(a, b) + 1e-12);
  }
}

TEST_CASE("SGD training") {
  const QuantKernel k{0.5};
  SUBCASE("huge regularizer pins the model to the prior mean") {
    auto [s, task] = make_synthetic_task(3, 100, 0.1, 8);
    const Prior q{{0.4, -0.7, 1.1}, 1.0};
    TrainConfig cfg;
    cfg.kl_weight = 1e6;
    cfg.learning_rate = 1e-7;
    cfg.epochs = 50;
    const auto w = sgd_train(s, cfg, q, k, task.loss_spec());
    CHECK(distance(w.coords(), q.mean) < 1e-2);
  }
  SUBCASE("unregularized fit on a noiseless task") {
    auto [s, task] = make_synthetic_task(10, 200, 0.0, 9);
    const Prior q{std::vector<double>(10, 0.0), 1.0};
    TrainConfig cfg;
    cfg.kl_weight = 0.0;
    cfg.epochs = 200;
    const auto w = sgd_train(s, cfg, q, k, task.loss_spec());
    CHECK(empirical_risk(s, w, task.loss_spec()) < 0.1);
    CHECK(sgd_train(s, cfg, q, k, task.loss_spec()) == w);
    cfg.seed = 2;
    CHECK(sgd_train(s, cfg, q, k, task.loss_spec()) != w);
  }
  SUBCASE("KL to the prior shrinks as the weight grows") {
    auto [s, task] = make_synthetic_task(8, 200, 0.1, 10);
    const Prior q{std::vector<double>(8, 0.0), 1.0};
    double prev = INFINITY;
    for (double lam : {0.0, 0.01, 0.1, 1.0}) {
      TrainConfig cfg;
      cfg.kl_weight = lam;
      const double kl = kl_to_prior(sgd_train(s, cfg, q, k, task.loss_spec()), k, q);
      CHECK(kl <= prev + 1e-6);
      prev = kl;
    }
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.kl_weight = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = 1e9;
  cfg.kl_weight = 1e9;
  auto [s, task] = make_synthetic_task(2, 20, 0.1, 1);
  CHECK_THROWS_AS(sgd_train(s, cfg, Prior{{0.0, 0.0}, 1.0}, QuantKernel{0.5}, task.loss_spec()), DivergenceError);
}
