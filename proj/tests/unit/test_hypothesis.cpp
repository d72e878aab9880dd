#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mincomm/error.hpp"
#include "mincomm/hypothesis.hpp"
#include "mincomm/io.hpp"
#include "mincomm/trainer.hpp"

using namespace mincomm;

namespace {

class ZeroFeatures final : public DataDistribution {
 public:
  explicit ZeroFeatures(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  void draw(Rng& rng, std::span<double> x, std::uint8_t& y) const override {
    for (auto& v : x) v = 0.0;
    y = static_cast<std::uint8_t>(rng.below(2));
  }

 private:
  std::size_t d_;
};

}  // namespace

TEST_CASE("hypothesis validation") {
  CHECK_THROWS_AS(Hypothesis(std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(Hypothesis({1.0, NAN}), ConfigError);
  CHECK_THROWS_AS(Hypothesis({INFINITY}), ConfigError);
  Hypothesis w({3.0, 4.0});
  CHECK(norm(w.coords()) == 5.0);
  CHECK(distance(w.coords(), Hypothesis::zeros(2).coords()) == 5.0);
}

TEST_CASE("loss values") {
  const LossSpec spec = LossSpec::for_feature_bound(2.0);
  CHECK(spec.lipschitz_const == 0.5);
  Hypothesis w({1.7, -3.0});
  Sample zero0{{0.0, 0.0}, 0};
  Sample zero1{{0.0, 0.0}, 1};
  CHECK(loss(zero0, w, spec) == 0.5);
  CHECK(loss(zero1, w, spec) == 0.5);
  Sample far{{10.0, 0.0}, 1};
  CHECK(loss(far, Hypothesis({10.0, 0.0}), spec) < 1e-9);
  for (double v : {-800.0, -3.0, 0.0, 3.0, 800.0}) {
    const double l = loss(std::vector<double>{v}, 1, std::vector<double>{1.0}, spec);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
}

TEST_CASE("empirical risk is the mean loss") {
  const LossSpec spec;
  // w = 1, x = logit(0.8) gives loss 0.2 for y = 1; x = logit(0.6) gives 0.6 for y = 0.
  const double a = std::log(0.8 / 0.2);
  const double b = std::log(0.6 / 0.4);
  Dataset s(std::vector<Sample>{{{a}, 1}, {{b}, 0}});
  Hypothesis w({1.0});
  CHECK(empirical_risk(s, w, spec) == doctest::Approx(0.4).epsilon(1e-12));
  Dataset one(std::vector<Sample>{{{a}, 1}});
  CHECK(empirical_risk(one, w, spec) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(empirical_risk(s, Hypothesis({1.0, 2.0}), spec), ConfigError);
}

TEST_CASE("population risk on a constant-loss task") {
  ZeroFeatures mu(3);
  const auto est = population_risk_mc(mu, Hypothesis({1.0, 2.0, 3.0}), 5000, 9, LossSpec{});
  CHECK(est.mean == 0.5);
  CHECK(est.samples == 5000);
}

TEST_CASE("population risk estimates agree across seeds and rank models") {
  auto task = SyntheticTask::make(4, 0.0, 21);
  const LossSpec spec = task.loss_spec();
  const auto a = population_risk_mc(task, task.true_w(), 40000, 1, spec);
  const auto b = population_risk_mc(task, task.true_w(), 40000, 2, spec);
  const double pooled = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  CHECK(std::abs(a.mean - b.mean) < 3.0 * pooled);
  const auto zero = population_risk_mc(task, Hypothesis::zeros(4), 40000, 1, spec);
  CHECK(a.mean < zero.mean);
}

TEST_CASE("gen_error") {
  Dataset s(std::vector<Sample>{{{0.0}, 1}});
  const LossSpec spec;
  CHECK(gen_error(s, Hypothesis({2.0}), 0.5, spec) == 0.0);
  Dataset perfect(std::vector<Sample>{{{40.0}, 1}});
  CHECK(gen_error(perfect, Hypothesis({1.0}), 1.0, spec) == doctest::Approx(1.0));
}

TEST_CASE("dataset and model binary round trip") {
  auto [s, task] = make_synthetic_task(3, 25, 0.1, 4);
  CHECK(decode_dataset(encode_dataset(s)) == s);
  Hypothesis w({0.1, -2.5, 1e-300});
  CHECK(decode_model(encode_model(w)) == w);

  const auto dir = std::filesystem::temp_directory_path() / "mincomm_io_test";
  std::filesystem::create_directories(dir);
  write_dataset(dir / "d.bin", s);
  write_model(dir / "m.bin", w);
  CHECK(read_dataset(dir / "d.bin") == s);
  CHECK(read_model(dir / "m.bin") == w);
  std::filesystem::remove_all(dir);

  auto bytes = encode_model(w);
  bytes.pop_back();
  CHECK_THROWS(decode_model(bytes));
  auto bad = encode_dataset(s);
  bad[0] = 'X';
  CHECK_THROWS(decode_dataset(bad));
}
