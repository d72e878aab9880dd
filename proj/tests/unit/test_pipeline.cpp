#include <cmath>
#include <vector>

#include "doctest.h"
#include "mincomm/error.hpp"
#include "mincomm/experiment.hpp"
#include "mincomm/wire.hpp"

using namespace mincomm;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.task.dim = 4;
  cfg.task.n = 60;
  cfg.train.epochs = 10;
  cfg.trials = 6;
  cfg.population_samples = 2000;
  cfg.master_seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("wire message round trip for every precision mode") {
  const Prior q{{0.0, 0.0, 0.0}, 1.0};
  const SharedRandomness shared{123};
  Codebook client_cb(q, shared);
  const Hypothesis w({0.7, -1.1, 0.25});
  const auto code = IndexCode::zipf_for_rate(2.0);
  Receiver server(q, shared, code);
  for (auto mode : {PrecisionMode::none(), PrecisionMode::quantized(3), PrecisionMode::quantized(8),
                    PrecisionMode::full()}) {
    const auto enc = encode_orc(w, client_cb, 3.0, QuantKernel{0.5}, 11);
    WireMessage msg{enc.index, quantize_residual(w, client_cb.codeword(enc.index), mode)};
    const auto bytes = encode_message(msg, code);
    const auto back = decode_message(bytes, code, 3);
    CHECK(back.index == enc.index);
    CHECK(back.precision.mode == mode);
    const auto client_side = decode(enc.index, msg.precision, client_cb);
    const auto server_side = server.receive(bytes);
    CHECK(server_side == client_side);
    if (mode == PrecisionMode::full()) CHECK(server_side == w);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS(server.receive(truncated));
  }
  CHECK(index_field_bits(1, IndexCode::elias_delta()) == 1);
}

TEST_CASE("config JSON round trip and errors") {
  auto cfg = small_config();
  cfg.resolve();
  const auto j = to_json(cfg);
  auto again = config_from_json(j);
  again.resolve();
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  auto other = cfg;
  other.threads = 8;
  other.output_dir = "elsewhere";
  CHECK(config_hash(other) == config_hash(cfg));
  other.bounds.t = 5.0;
  CHECK(config_hash(other) != config_hash(cfg));

  auto bad = j;
  bad["unknown_key"] = 1;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["task"]["dim"] = "eight";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["encoder"] = "zip";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  auto mismatch = small_config();
  mismatch.prior.mean = {0.0, 0.0};
  CHECK_THROWS_AS(mismatch.resolve(), ConfigError);
}

TEST_CASE("pipeline is reproducible and thread-count independent") {
  auto cfg = small_config();
  cfg.threads = 1;
  const auto a = run_pipeline(cfg);
  cfg.threads = 3;
  const auto b = run_pipeline(cfg);
  REQUIRE(a.records.size() == 6);
  CHECK(a.failures == 0);
  auto strip = [](std::vector<TrialRecord> rs) {
    for (auto& r : rs) r.wall_ms = 0.0;
    return trials_csv(rs);
  };
  CHECK(strip(a.records) == strip(b.records));
  for (const auto& r : a.records) {
    CHECK(r.index >= 1);
    CHECK(r.index <= r.candidate_count);
    CHECK(r.delta_u == 0.0);
    CHECK(r.emp_risk_decoded >= 0.0);
    CHECK(r.emp_risk_decoded <= 1.0);
  }
  const auto summary = summarize(cfg, a);
  CHECK(summary.json.contains("config_hash"));
  CHECK_FALSE(summary.reports.empty());
}

TEST_CASE("full precision decodes to the trained model") {
  auto cfg = small_config();
  cfg.precision = PrecisionMode::full();
  const auto res = run_pipeline(cfg);
  for (const auto& r : res.records) {
    CHECK(r.emp_risk_decoded == r.emp_risk_trained);
    CHECK(r.delta_u == doctest::Approx(r.codeword_distance));
  }
}

TEST_CASE("VQ with a single codeword always sends index one") {
  auto cfg = small_config();
  cfg.encoder = EncoderKind::vq;
  cfg.bounds.n_vq = 1;
  const auto res = run_pipeline(cfg);
  for (const auto& r : res.records) CHECK(r.index == 1);
}
