// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "mincomm/campaigns.hpp"
#include "mincomm/parallel.hpp"

int main(int argc, char** argv) {
  mincomm::CampaignOptions opt;
  opt.threads = mincomm::default_threads();
  int only = 0;
  CLI::App app{"acceptance criteria"};
  app.add_option("--scale", opt.scale, "multiplier on trial counts")->check(CLI::PositiveNumber);
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--only", only, "run a single criterion (1-10)")->check(CLI::Range(0, 10));
  CLI11_PARSE(app, argc, argv);

  auto print = [](const mincomm::CriterionResult& r) {
    std::printf("%s\n", mincomm::format_result(r).c_str());
    std::fflush(stdout);
  };
  std::size_t failed = 0, total = 0;
  auto count = [&](const mincomm::CriterionResult& r) {
    print(r);
    ++total;
    if (!r.passed) ++failed;
  };
  try {
    switch (only) {
      case 0: mincomm::run_all_checks(opt, count); break;
      case 1: count(mincomm::check_orc_mrc_equivalence(opt)); break;
      case 2: count(mincomm::check_empirical_risk_bound(opt)); break;
      case 3: count(mincomm::check_expectation_bound(opt)); break;
      case 4: count(mincomm::check_comm_budget(opt)); break;
      case 5:
      case 6:
        for (const auto& r : mincomm::check_one_shot(opt))
          if (r.id == only) count(r);
        break;
      case 7: count(mincomm::check_appendix_grid(opt)); break;
      case 8: count(mincomm::check_regularizer_sweep(opt)); break;
      case 9: count(mincomm::check_precision_sweep(opt)); break;
      case 10: count(mincomm::check_unit_level(opt)); break;
    }
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%zu/%zu criteria passed\n", total - failed, total);
  return failed == 0 ? 0 : 1;
}
