#pragma once

// Monte Carlo validation campaigns. Each returns a pass/fail verdict with
// the measured statistic and the threshold it was held to.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mincomm {

struct CampaignOptions {
  /// Multiplies every trial count (clamped below at small minimums).
  double scale = 1.0;
  std::size_t threads = 1;
  std::uint64_t seed = 20240611;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// ORC and MRC select codewords whose log-ratio histograms agree (TV < 0.02).
CriterionResult check_orc_mrc_equivalence(const CampaignOptions& opt);
/// Empirical-risk bound violation rate at t in {4, 8}.
CriterionResult check_empirical_risk_bound(const CampaignOptions& opt);
/// Expected generalization bound over independent dataset draws.
CriterionResult check_expectation_bound(const CampaignOptions& opt);
/// Mean ORC index length under the Zipf code vs C + log(C + 1) + 4.
CriterionResult check_comm_budget(const CampaignOptions& opt);
/// VQ covering radius and one-shot generalization bound (two results).
std::vector<CriterionResult> check_one_shot(const CampaignOptions& opt);
/// Codebook concentration on the (t, ||w - mu||, d) grid.
CriterionResult check_appendix_grid(const CampaignOptions& opt);
/// KL, communication budget and bound monotone in the KL regularization weight.
CriterionResult check_regularizer_sweep(const CampaignOptions& opt);
/// Precision trade-off across none / q4 / q8 / full.
CriterionResult check_precision_sweep(const CampaignOptions& opt);
/// Codec round trip, gradient, Lipschitz and codebook agreement checks.
CriterionResult check_unit_level(const CampaignOptions& opt);

/// All ten checks in order; `on_result` fires as each completes.
std::vector<CriterionResult> run_all_checks(const CampaignOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [3] name: measured ... threshold ... (detail)".
std::string format_result(const CriterionResult& r);

}  // namespace mincomm
