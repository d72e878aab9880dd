#pragma once

// End-to-end pipeline: dataset -> train -> encode -> residual -> wire ->
// server-side decode -> measurements, plus result persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mincomm/bounds.hpp"
#include "mincomm/codebook.hpp"
#include "mincomm/encoders.hpp"
#include "mincomm/index_codec.hpp"
#include "mincomm/kernel.hpp"
#include "mincomm/trainer.hpp"

namespace mincomm {

struct TaskConfig {
  std::size_t dim = 8;
  std::size_t n = 200;
  double label_noise = 0.1;
  double true_w_norm = 3.0;
  double feature_bound = 2.0;
};

struct ExperimentConfig {
  TaskConfig task;
  TrainConfig train;
  /// Empty mean means the origin in task.dim dimensions.
  Prior prior{{}, 1.0};
  QuantKernel kernel{0.5};
  BoundConfig bounds;
  EncoderKind encoder = EncoderKind::orc;
  PrecisionMode precision = PrecisionMode::none();
  /// "zipf" (rate from the mean KL of the trained models) or "elias-delta".
  std::string index_code = "zipf";
  std::size_t trials = 100;
  std::size_t population_samples = 20000;
  std::size_t threads = 1;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";

  /// Fills defaults that depend on other fields (prior mean) and checks
  /// every invariant. Throws ConfigError.
  void resolve();
  LossSpec loss_spec() const { return LossSpec::for_feature_bound(task.feature_bound); }
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Unknown keys and ill-typed values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical (sorted-key, compact) serialization of the resolved config.
std::string canonical_config(const ExperimentConfig& cfg);
/// 16 hex digits of FNV-1a 64 over canonical_config.
std::string config_hash(const ExperimentConfig& cfg);

struct TrialRecord {
  std::size_t trial_id = 0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t train_seed = 0;
  std::uint64_t codebook_seed = 0;
  std::uint64_t encoder_seed = 0;
  bool failed = false;
  std::string error;

  double emp_risk_trained = 0.0;
  double emp_risk_decoded = 0.0;
  double pop_risk_trained = 0.0;
  double pop_risk_decoded = 0.0;
  double gen_trained = 0.0;
  double gen_decoded = 0.0;

  double kl = 0.0;
  double b = 0.0;
  std::uint64_t index = 0;
  std::uint64_t candidate_count = 0;
  std::uint64_t candidates_examined = 0;
  std::uint64_t index_bits = 0;
  std::uint64_t payload_bits = 0;
  std::uint64_t message_bytes = 0;
  double codeword_distance = 0.0;  // ||W - W_tilde[K]||
  double delta_u = 0.0;
  double residual_norm = 0.0;      // ||W_eps||

  /// Empirical-risk bound evaluated with this trial's Delta_U.
  double emp_bound_rhs = 0.0;
  bool emp_bound_vacuous = false;
  /// Decoded-model generalization bound (one-shot form for VQ).
  double gen_bound_rhs = 0.0;
  double wall_ms = 0.0;
};

struct PipelineResult {
  std::vector<TrialRecord> records;
  IndexCode code;
  /// Mean KL over the successfully trained models.
  double c_hat = 0.0;
  std::size_t failures = 0;
};

/// Runs cfg.trials independent trials; records are ordered by trial id.
/// Module errors mark the trial failed and the campaign continues.
PipelineResult run_pipeline(ExperimentConfig cfg);

/// Aggregates of a pipeline run, bound reports included.
struct PipelineSummary {
  nlohmann::json json;
  std::vector<BoundReport> reports;
};
PipelineSummary summarize(const ExperimentConfig& cfg, const PipelineResult& result);

std::string trials_csv(const std::vector<TrialRecord>& records);
std::string bounds_csv(const std::vector<BoundReport>& reports, const std::string& hash);

/// trials.csv, bounds.csv, config.echo.json, summary.json under `dir`.
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PipelineResult& result,
                   const PipelineSummary& summary);

}  // namespace mincomm
