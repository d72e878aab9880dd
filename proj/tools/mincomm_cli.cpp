// mincomm: train / compress / bounds / verify-appendix / sweep / selftest.
//
// Exit codes: 0 success, 1 selftest criterion failed, 2 configuration or
// usage error, 3 any other runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mincomm/bounds.hpp"
#include "mincomm/campaigns.hpp"
#include "mincomm/error.hpp"
#include "mincomm/experiment.hpp"
#include "mincomm/io.hpp"
#include "mincomm/parallel.hpp"

namespace fs = std::filesystem;
using namespace mincomm;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::string encoder;
  std::string precision;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--trials", f.trials, "number of trials");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--encoder", f.encoder, "mrc, orc or vq");
  cmd->add_option("--precision", f.precision, "none, full or q<bits>");
  cmd->add_option("--threads", f.threads, "worker threads");
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  if (f.trials) cfg.trials = *f.trials;
  if (f.seed) cfg.master_seed = *f.seed;
  if (!f.encoder.empty()) cfg.encoder = parse_encoder_kind(f.encoder);
  if (!f.precision.empty()) cfg.precision = PrecisionMode::parse(f.precision);
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.resolve();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void print_summary(const nlohmann::json& j) {
  std::cout << j.dump(2) << "\n";
}

int cmd_train(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto task = SyntheticTask::make(cfg.task.dim, cfg.task.label_noise, cfg.master_seed, cfg.task.true_w_norm,
                                        cfg.task.feature_bound);
  const Dataset s = task.sample_dataset(cfg.task.n, derive_seed(cfg.master_seed, 0, "dataset"));
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.master_seed, 0, "train");
  const auto spec = cfg.loss_spec();
  const Hypothesis w = sgd_train(s, tc, cfg.prior, cfg.kernel, spec);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_dataset(dir / "dataset.bin", s);
  write_model(dir / "model.bin", w);
  nlohmann::json j;
  j["config_hash"] = config_hash(cfg);
  j["emp_risk"] = empirical_risk(s, w, spec);
  j["pop_risk"] = population_risk_mc(task, w, cfg.population_samples, derive_seed(cfg.master_seed, 0, "population"),
                                     spec).mean;
  j["kl_to_prior"] = kl_to_prior(w, cfg.kernel, cfg.prior);
  j["b_w"] = b_w(w, cfg.kernel, cfg.prior, cfg.bounds.t, cfg.bounds.tail_measure);
  j["weights"] = w.vec();
  write_text(dir / "config.echo.json", to_json(cfg).dump(2) + "\n");
  write_text(dir / "summary.json", j.dump(2) + "\n");
  print_summary(j);
  return 0;
}

int cmd_compress(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto result = run_pipeline(cfg);
  const auto summary = summarize(cfg, result);
  write_outputs(cfg.output_dir, cfg, result, summary);
  print_summary(summary.json);
  return 0;
}

int cmd_bounds(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto result = run_pipeline(cfg);
  auto summary = summarize(cfg, result);
  const auto spec = cfg.loss_spec();
  const double second = kernel_second_moment(cfg.task.dim, cfg.kernel);

  std::vector<ModelTerm> terms;
  double gen = 0.0;
  std::size_t ok = 0;
  for (const auto& r : result.records) {
    if (r.failed) continue;
    terms.push_back({r.kl, r.b});
    gen += r.gen_decoded;
    ++ok;
  }
  if (ok > 0) {
    const auto eb = gen_bound_expectation(terms, second, spec.lipschitz_const, cfg.bounds.t, cfg.task.n,
                                          cfg.bounds.delta);
    gen /= static_cast<double>(ok);
    summary.reports.push_back(make_report("gen_bound_expectation", eb.rhs, gen, gen, gen, 0.0));
    summary.json["gen_bound_expectation"] = {{"c_s", eb.c_s}, {"t_s", eb.t_s}, {"eps_s", eb.eps_s}, {"rhs", eb.rhs}};
  }
  if (cfg.encoder == EncoderKind::vq) {
    std::vector<Hypothesis> pool;
    const auto task = SyntheticTask::make(cfg.task.dim, cfg.task.label_noise, cfg.master_seed, cfg.task.true_w_norm,
                                          cfg.task.feature_bound);
    for (std::size_t i = 0; i < std::min<std::size_t>(cfg.trials, 200); ++i) {
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.master_seed, i, "tau-train");
      pool.push_back(sgd_train(task.sample_dataset(cfg.task.n, derive_seed(cfg.master_seed, i, "tau-dataset")), tc,
                               cfg.prior, cfg.kernel, spec));
    }
    const auto tau = tau_eps(pool, cfg.kernel, cfg.prior, cfg.bounds.n_vq, cfg.bounds.epsilon_vq, TauGrid{},
                             cfg.bounds.mc_samples / 5 + 1, derive_seed(cfg.master_seed, 0, "tau"),
                             cfg.bounds.ratio_scale);
    std::size_t outside = 0;
    for (const auto& r : result.records)
      if (!r.failed && r.codeword_distance > cfg.bounds.epsilon_vq) ++outside;
    const double freq = ok ? static_cast<double>(outside) / static_cast<double>(ok) : 0.0;
    const double se = ok ? std::sqrt(freq * (1.0 - freq) / static_cast<double>(ok)) : 0.0;
    summary.reports.push_back(make_report("tau_eps", tau.tau, freq, freq - 1.96 * se, freq + 1.96 * se, 3.0 * se,
                                          !tau.feasible));
    summary.json["tau_eps"] = {{"tau", tau.tau},
                               {"feasible", tau.feasible},
                               {"gamma", tau.gamma},
                               {"n1", tau.n1},
                               {"n2", tau.n2},
                               {"cover_term", tau.cover_term},
                               {"gumbel_term", tau.gumbel_term},
                               {"ratio_term", tau.ratio_term},
                               {"condition_c_gumbel", tau.condition_c_gumbel}};
  }
  write_outputs(cfg.output_dir, cfg, result, summary);
  print_summary(summary.json);
  return 0;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw ConfigError("bad number in list: " + item);
    } catch (const std::logic_error&) {
      throw ConfigError("bad number in list: " + item);
    }
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

int cmd_verify_appendix(const CommonFlags& f, const std::string& ts, const std::string& offsets,
                        const std::string& dims, double kernel_variance, double prior_variance) {
  const auto cfg = resolve_config(f);
  if (!(kernel_variance > 0.0) || !(prior_variance > 0.0)) throw ConfigError("variances must be positive");
  const QuantKernel kernel{kernel_variance};
  std::ostringstream csv;
  csv << "d,offset,t,n_codewords,kl,b,i_w,i_w_mc,sigma0,a,mean_abs_gap,gap_se,bound,clip_codebook_term,"
         "clip_mean_term,remainder_term,clip_term_bound,remainder_bound,weight_deviation_freq,weight_deviation_bound,"
         "violated\n";
  std::vector<BoundReport> reports;
  std::size_t point = 0;
  bool any_violation = false;
  for (double dv : parse_list(dims)) {
    const auto d = static_cast<std::size_t>(dv);
    if (d == 0 || static_cast<double>(d) != dv) throw ConfigError("dimensions must be positive integers");
    const Prior prior{std::vector<double>(d, 0.0), prior_variance};
    for (double off : parse_list(offsets)) {
      std::vector<double> wv(d, 0.0);
      wv[0] = off;
      for (double t : parse_list(ts)) {
        const auto diag = appendix_claim_check(Hypothesis(wv), kernel, prior, t, cfg.trials,
                                               derive_seed(cfg.master_seed, point++, "appendix"), kDefaultOrcCap,
                                               200000, cfg.threads);
        char buf[1024];
        std::snprintf(buf, sizeof buf,
                      "%zu,%.17g,%.17g,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%d\n",
                      d, off, t, static_cast<unsigned long long>(diag.n_codewords), diag.kl, diag.b, diag.i_w,
                      diag.i_w_mc, diag.sigma0, diag.a_threshold, diag.mean_abs_gap, diag.gap_std_error, diag.bound,
                      diag.clip_codebook_term, diag.clip_mean_term, diag.remainder_term, diag.clip_term_bound,
                      diag.remainder_bound, diag.weight_deviation_freq, diag.weight_deviation_bound,
                      diag.report.violated ? 1 : 0);
        csv << buf;
        auto rep = diag.report;
        std::ostringstream name;
        name << rep.name << "_d" << d << "_off" << off << "_t" << t;
        rep.name = name.str();
        reports.push_back(rep);
        any_violation = any_violation || rep.violated;
        std::printf("d=%zu |w-mu|=%g t=%g  E|I_N - I| = %.4f  <=  sigma0*b = %.4f  %s\n", d, off, t,
                    diag.mean_abs_gap, diag.bound, rep.violated ? "VIOLATED" : "ok");
      }
    }
  }
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text(dir / "appendix.csv", csv.str());
  write_text(dir / "bounds.csv", bounds_csv(reports, config_hash(cfg)));
  write_text(dir / "config.echo.json", to_json(cfg).dump(2) + "\n");
  return any_violation ? kExitViolation : 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& param, const std::string& values) {
  const auto base = resolve_config(f);
  std::vector<std::string> items;
  {
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(item);
  }
  if (items.empty()) throw ConfigError("--values is empty");
  std::ostringstream csv;
  csv << "param,value,config_hash,trials,failures,mean_emp_risk_trained,mean_emp_risk_decoded,mean_emp_risk_gap,"
         "mean_gen_decoded,mean_delta_u,mean_payload_bits,mean_index_bits,c_hat,comm_budget_nats,"
         "gen_bound_rhs_mean,gen_eps_term_mean\n";
  for (const auto& item : items) {
    ExperimentConfig cfg = base;
    if (param == "precision_bits" || param == "precision") {
      cfg.precision = PrecisionMode::parse(item);
    } else if (param == "kl_weight") {
      cfg.train.kl_weight = parse_list(item).front();
    } else if (param == "t") {
      cfg.bounds.t = parse_list(item).front();
    } else if (param == "kernel_variance") {
      cfg.kernel.variance = parse_list(item).front();
    } else if (param == "encoder") {
      cfg.encoder = parse_encoder_kind(item);
    } else {
      throw ConfigError("unknown sweep parameter: " + param +
                        " (precision_bits, kl_weight, t, kernel_variance, encoder)");
    }
    cfg.resolve();
    const auto result = run_pipeline(cfg);
    const auto summary = summarize(cfg, result);
    const auto& j = summary.json;
    double rhs = 0.0, eps = 0.0;
    std::size_t ok = 0;
    for (const auto& r : result.records) {
      if (r.failed) continue;
      rhs += r.gen_bound_rhs;
      eps += decoded_eps_term(r.b, kernel_second_moment(cfg.task.dim, cfg.kernel), cfg.loss_spec().lipschitz_const,
                              cfg.precision);
      ++ok;
    }
    if (ok) {
      rhs /= static_cast<double>(ok);
      eps /= static_cast<double>(ok);
    }
    char buf[1024];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  param.c_str(), item.c_str(), config_hash(cfg).c_str(), result.records.size(), result.failures,
                  j["mean_emp_risk_trained"].get<double>(), j["mean_emp_risk_decoded"].get<double>(),
                  j["mean_emp_risk_gap"].get<double>(), j["mean_gen_decoded"].get<double>(),
                  j["mean_delta_u"].get<double>(), j["mean_payload_bits"].get<double>(),
                  j["mean_index_bits"].get<double>(), result.c_hat, comm_budget(result.c_hat), rhs, eps);
    csv << buf;
    std::cout << buf;
  }
  const fs::path dir = base.output_dir;
  fs::create_directories(dir);
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "config.echo.json", to_json(base).dump(2) + "\n");
  return 0;
}

int cmd_selftest(const CommonFlags& f, double scale) {
  CampaignOptions opt;
  opt.scale = scale;
  opt.threads = f.threads.value_or(default_threads());
  if (f.seed) opt.seed = *f.seed;
  std::size_t failed = 0;
  const auto results = run_all_checks(opt, [&](const CriterionResult& r) {
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  });
  std::printf("%zu/%zu checks passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-efficient model coding: encoders, bounds and validation campaigns"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* train = app.add_subcommand("train", "train one model and save it with its dataset");
  add_common(train, flags);
  auto* compress = app.add_subcommand("compress", "run the end-to-end coding pipeline");
  add_common(compress, flags);
  auto* bounds = app.add_subcommand("bounds", "pipeline plus expectation and covering bounds");
  add_common(bounds, flags);
  auto* appendix = app.add_subcommand("verify-appendix", "codebook concentration check on a grid");
  add_common(appendix, flags);
  std::string ts = "2,4,8", offsets = "0,1,2", dims = "2,8";
  appendix->add_option("--t-values", ts, "comma-separated t grid");
  appendix->add_option("--offsets", offsets, "comma-separated ||w - mu|| grid");
  appendix->add_option("--dims", dims, "comma-separated dimensions");
  double appendix_kernel = 1.0, appendix_prior = 1.0;
  appendix->add_option("--kernel-variance", appendix_kernel, "kernel variance for the grid");
  appendix->add_option("--prior-variance", appendix_prior, "prior variance for the grid");
  auto* sweep = app.add_subcommand("sweep", "one pipeline run per parameter value");
  add_common(sweep, flags);
  std::string param, values;
  sweep->add_option("--param", param, "precision_bits, kl_weight, t, kernel_variance or encoder")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  auto* selftest = app.add_subcommand("selftest", "run every validation campaign");
  add_common(selftest, flags);
  double scale = 1.0;
  selftest->add_option("--scale", scale, "multiplier on campaign trial counts")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(flags);
    if (*compress) return cmd_compress(flags);
    if (*bounds) return cmd_bounds(flags);
    if (*appendix) {
      if (!flags.trials) flags.trials = 1000;
      return cmd_verify_appendix(flags, ts, offsets, dims, appendix_kernel, appendix_prior);
    }
    if (*sweep) return cmd_sweep(flags, param, values);
    if (*selftest) return cmd_selftest(flags, scale);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
