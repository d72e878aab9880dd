#include "mincomm/campaigns.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "mincomm/bounds.hpp"
#include "mincomm/error.hpp"
#include "mincomm/experiment.hpp"
#include "mincomm/index_codec.hpp"
#include "mincomm/parallel.hpp"
#include "mincomm/wire.hpp"

namespace mincomm {

namespace {

using Clock = std::chrono::steady_clock;

std::size_t scaled(std::size_t n, const CampaignOptions& opt, std::size_t floor_at) {
  const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(n) * opt.scale));
  return std::max(v, floor_at);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double binomial_se(double p, std::size_t n) { return n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0; }

template <class... Args>
std::string printf_string(const char* format, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

CriterionResult make_result(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

/// The default experiment, resolved.
ExperimentConfig default_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.master_seed = seed;
  cfg.resolve();
  return cfg;
}

/// The task, a holdout set standing in for mu, and a trainer for dataset j.
struct Setup {
  ExperimentConfig cfg;
  SyntheticTask task;
  Dataset holdout;
  LossSpec spec;

  explicit Setup(const ExperimentConfig& c)
      : cfg(c),
        task(SyntheticTask::make(c.task.dim, c.task.label_noise, c.master_seed, c.task.true_w_norm,
                                 c.task.feature_bound)),
        holdout(task.sample_dataset(c.population_samples, derive_seed(c.master_seed, 0, "holdout"))),
        spec(c.loss_spec()) {}

  Dataset dataset(std::uint64_t j, std::string_view stage) const {
    return task.sample_dataset(cfg.task.n, derive_seed(cfg.master_seed, j, stage));
  }
  Hypothesis train(const Dataset& s, std::uint64_t seed, double kl_weight) const {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.kl_weight = kl_weight;
    return sgd_train(s, tc, cfg.prior, cfg.kernel, spec);
  }
  Hypothesis train(const Dataset& s, std::uint64_t seed) const { return train(s, seed, cfg.train.kl_weight); }
  double pop_risk(const Hypothesis& w) const { return empirical_risk(holdout, w, spec); }
};

}  // namespace

CriterionResult check_orc_mrc_equivalence(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(1, "orc_mrc_equivalence");
  constexpr std::size_t d = 4;
  constexpr double t = 4.0;
  const Prior prior{std::vector<double>(d, 0.0), 1.0};
  const QuantKernel kernel{1.0};
  std::vector<double> wv(d, 0.0);
  wv[0] = 1.0;
  const Hypothesis w(wv);
  const std::uint64_t n_w = orc_candidate_count(kl_to_prior(w, kernel, prior), t);
  const std::size_t pairs = scaled(100000, opt, 1000);

  std::vector<double> orc_values(pairs), mrc_values(pairs);
  parallel_for(pairs, opt.threads, [&](std::size_t i) {
    const Codebook cb(prior, SharedRandomness{derive_seed(opt.seed, i, "equiv-codebook")});
    LogRatioTable table(cb, w, kernel);
    const auto orc = encode_orc(table, t, derive_seed(opt.seed, i, "equiv-orc"));
    const auto mrc = encode_mrc(table, n_w, derive_seed(opt.seed, i, "equiv-mrc"));
    orc_values[i] = table(orc.index);
    mrc_values[i] = table(mrc.index);
  });

  constexpr std::size_t buckets = 32;
  const auto [lo_o, hi_o] = std::minmax_element(orc_values.begin(), orc_values.end());
  const auto [lo_m, hi_m] = std::minmax_element(mrc_values.begin(), mrc_values.end());
  const double lo = std::min(*lo_o, *lo_m);
  const double hi = std::max(*hi_o, *hi_m);
  const double width = (hi - lo) / buckets;
  std::vector<double> ho(buckets, 0.0), hm(buckets, 0.0);
  auto bucket = [&](double v) {
    if (!(width > 0.0)) return std::size_t{0};
    return std::min(buckets - 1, static_cast<std::size_t>((v - lo) / width));
  };
  for (double v : orc_values) ho[bucket(v)] += 1.0;
  for (double v : mrc_values) hm[bucket(v)] += 1.0;
  double tv = 0.0;
  for (std::size_t b = 0; b < buckets; ++b) tv += std::abs(ho[b] - hm[b]);
  tv *= 0.5 / static_cast<double>(pairs);

  out.measured = tv;
  out.threshold = 0.02;
  out.passed = tv < out.threshold;
  out.detail = printf_string("pairs=%zu N_W=%llu", pairs, static_cast<unsigned long long>(n_w));
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_empirical_risk_bound(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(2, "empirical_risk_bound");
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const Dataset s = setup.dataset(0, "erb-dataset");
  const Hypothesis w = setup.train(s, derive_seed(opt.seed, 0, "erb-train"));
  const double emp = empirical_risk(s, w, setup.spec);
  const double second = kernel_second_moment(w.dim(), cfg.kernel);
  const std::size_t codebooks = scaled(1000, opt, 50);
  constexpr std::size_t draws = 64;

  out.passed = true;
  out.measured = 0.0;
  out.threshold = 0.0;
  std::ostringstream detail;
  detail << "KL=" << kl_to_prior(w, cfg.kernel, cfg.prior) << " codebooks=" << codebooks;
  for (double t : {4.0, 8.0}) {
    const double b = b_w(w, cfg.kernel, cfg.prior, t, cfg.bounds.tail_measure);
    const auto bound = emp_risk_bound_rhs(emp, b, second, setup.spec.lipschitz_const, 0.0);
    detail << " | t=" << t << " b=" << b;
    if (bound.vacuous) {
      detail << " vacuous";
      continue;
    }
    std::vector<std::uint8_t> violated(codebooks, 0);
    parallel_for(codebooks, opt.threads, [&](std::size_t u) {
      const Codebook cb(cfg.prior, SharedRandomness{derive_seed(opt.seed, u, "erb-codebook")});
      LogRatioTable table(cb, w, cfg.kernel);
      std::map<std::uint64_t, double> risk;
      double total = 0.0, delta = 0.0;
      for (std::size_t e = 0; e < draws; ++e) {
        const auto enc = encode_orc(table, t, derive_seed(opt.seed, u * draws + e, "erb-encoder"));
        auto it = risk.find(enc.index);
        if (it == risk.end()) it = risk.emplace(enc.index, empirical_risk(s, cb.codeword(enc.index), setup.spec)).first;
        total += it->second;
        delta += delta_u(w, enc.index, quantize_residual(w, cb.codeword(enc.index), cfg.precision), cb);
      }
      const auto rhs = emp_risk_bound_rhs(emp, b, second, setup.spec.lipschitz_const, delta / draws).rhs;
      violated[u] = total / draws > rhs ? 1 : 0;
    });
    const double freq = static_cast<double>(std::count(violated.begin(), violated.end(), 1)) / codebooks;
    const double limit = 2.0 * std::sqrt(b) + 3.0 * binomial_se(freq, codebooks);
    detail << " rhs=" << bound.rhs << " freq=" << freq << " limit=" << limit;
    out.passed = out.passed && freq <= limit;
    if (freq - limit >= out.measured - out.threshold) {
      out.measured = freq;
      out.threshold = limit;
    }
  }
  out.detail = detail.str();
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_expectation_bound(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(3, "expectation_bound");
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const std::size_t datasets = scaled(200, opt, 20);
  constexpr std::size_t models_per_set = 4;
  constexpr std::size_t codings_per_model = 4;
  const double second = kernel_second_moment(cfg.task.dim, cfg.kernel);

  std::vector<std::uint8_t> violated(datasets, 0), violated_trained(datasets, 0);
  std::vector<double> rhs_values(datasets), gen_values(datasets);
  parallel_for(datasets, opt.threads, [&](std::size_t j) {
    const Dataset s = setup.dataset(j, "eb-dataset");
    std::vector<ModelTerm> terms;
    double gen_decoded = 0.0, gen_trained = 0.0;
    for (std::size_t r = 0; r < models_per_set; ++r) {
      const std::size_t id = j * models_per_set + r;
      const Hypothesis w = setup.train(s, derive_seed(opt.seed, id, "eb-train"));
      terms.push_back({kl_to_prior(w, cfg.kernel, cfg.prior), b_w(w, cfg.kernel, cfg.prior, cfg.bounds.t)});
      gen_trained += setup.pop_risk(w) - empirical_risk(s, w, setup.spec);
      for (std::size_t c = 0; c < codings_per_model; ++c) {
        const std::size_t cid = id * codings_per_model + c;
        const Codebook cb(cfg.prior, SharedRandomness{derive_seed(opt.seed, cid, "eb-codebook")});
        const auto enc = encode_orc(w, cb, cfg.bounds.t, cfg.kernel, derive_seed(opt.seed, cid, "eb-encoder"));
        const auto payload = quantize_residual(w, cb.codeword(enc.index), cfg.precision);
        const Hypothesis decoded = decode(enc.index, payload, cb);
        gen_decoded += setup.pop_risk(decoded) - empirical_risk(s, decoded, setup.spec);
      }
    }
    gen_decoded /= models_per_set * codings_per_model;
    gen_trained /= models_per_set;
    const auto bound =
        gen_bound_expectation(terms, second, setup.spec.lipschitz_const, cfg.bounds.t, cfg.task.n, cfg.bounds.delta);
    rhs_values[j] = bound.rhs;
    gen_values[j] = gen_decoded;
    violated[j] = gen_decoded > bound.rhs ? 1 : 0;
    violated_trained[j] = gen_trained > bound.rhs ? 1 : 0;
  });
  const double freq = static_cast<double>(std::count(violated.begin(), violated.end(), 1)) / datasets;
  const double freq_trained =
      static_cast<double>(std::count(violated_trained.begin(), violated_trained.end(), 1)) / datasets;
  out.measured = freq;
  out.threshold = cfg.bounds.delta + 3.0 * binomial_se(freq, datasets);
  out.passed = freq <= out.threshold && freq_trained <= cfg.bounds.delta + 3.0 * binomial_se(freq_trained, datasets);
  out.detail = printf_string("datasets=%zu min_rhs=%.4f max_gen=%.4f trained_freq=%.4f", datasets,
                             *std::min_element(rhs_values.begin(), rhs_values.end()),
                             *std::max_element(gen_values.begin(), gen_values.end()), freq_trained);
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_comm_budget(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(4, "comm_budget");
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const std::size_t models = scaled(100, opt, 10);
  const std::size_t per_model = 100;
  std::vector<std::optional<Hypothesis>> ws(models);
  std::vector<double> kls(models);
  parallel_for(models, opt.threads, [&](std::size_t j) {
    ws[j] = setup.train(setup.dataset(j, "cb-dataset"), derive_seed(opt.seed, j, "cb-train"));
    kls[j] = kl_to_prior(*ws[j], cfg.kernel, cfg.prior);
  });
  double c_hat = 0.0;
  for (double v : kls) c_hat += v;
  c_hat /= static_cast<double>(models);
  const IndexCode code = IndexCode::zipf_for_rate(c_hat);

  const std::size_t encodings = models * per_model;
  std::vector<double> nats(encodings);
  parallel_for(encodings, opt.threads, [&](std::size_t e) {
    const Codebook cb(cfg.prior, SharedRandomness{derive_seed(opt.seed, e, "cb-codebook")});
    const auto enc = encode_orc(*ws[e / per_model], cb, cfg.bounds.t, cfg.kernel, derive_seed(opt.seed, e, "cb-encoder"));
    nats[e] = static_cast<double>(code_length_bits(enc.index, code)) * std::log(2.0);
  });
  double mean = 0.0;
  for (double v : nats) mean += v;
  mean /= static_cast<double>(encodings);
  out.measured = mean;
  out.threshold = comm_budget(c_hat) + 0.7;
  out.passed = mean <= out.threshold;
  out.detail = printf_string("encodings=%zu C_hat=%.4f code=%s", encodings, c_hat, code.to_string().c_str());
  out.seconds = seconds_since(start);
  return out;
}

std::vector<CriterionResult> check_one_shot(const CampaignOptions& opt) {
  const auto start = Clock::now();
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const std::uint64_t n_vq = 4096;
  constexpr double tau_target = 0.2;

  // Draws of W for the covering evaluator.
  const std::size_t pool = scaled(200, opt, 20);
  std::vector<std::optional<Hypothesis>> pool_w(pool);
  parallel_for(pool, opt.threads, [&](std::size_t j) {
    pool_w[j] = setup.train(setup.dataset(j, "vq-pool-dataset"), derive_seed(opt.seed, j, "vq-pool-train"));
  });
  std::vector<Hypothesis> models;
  for (auto& w : pool_w) models.push_back(std::move(*w));
  const std::size_t m = 2000;
  const TauGrid grid;
  auto tau_at = [&](double eps) {
    return tau_eps(models, cfg.kernel, cfg.prior, n_vq, eps, grid, m, derive_seed(opt.seed, 0, "vq-tau"),
                   cfg.bounds.ratio_scale);
  };
  // Smallest radius on a 0.01 grid with tau <= target; tau is non-increasing in eps.
  double lo = 0.0, hi = 1.0;
  while (tau_at(hi).tau > tau_target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw NumericError("no covering radius reaches the target tau");
  }
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    (tau_at(mid).tau <= tau_target ? hi : lo) = mid;
  }
  const double eps = hi;
  const TauResult tau = tau_at(eps);

  const std::size_t draws = scaled(1000, opt, 50);
  std::vector<std::uint8_t> outside(draws, 0), gen_violated(draws, 0);
  const double rhs = gen_bound_oneshot_rhs(n_vq, cfg.task.n, 0.05, setup.spec.lipschitz_const, eps);
  parallel_for(draws, opt.threads, [&](std::size_t i) {
    const Dataset s = setup.dataset(i, "vq-dataset");
    const Hypothesis w = setup.train(s, derive_seed(opt.seed, i, "vq-train"));
    const Codebook cb(cfg.prior, SharedRandomness{derive_seed(opt.seed, i, "vq-codebook")}, n_vq);
    const auto enc = encode_vq(w, cb, n_vq);
    const Hypothesis codeword = cb.codeword(enc.index);
    outside[i] = distance(w.coords(), codeword.coords()) > eps ? 1 : 0;
    const Hypothesis decoded = decode(enc.index, quantize_residual(w, codeword, cfg.precision), cb);
    gen_violated[i] = setup.pop_risk(decoded) - empirical_risk(s, decoded, setup.spec) > rhs ? 1 : 0;
  });
  const double freq = static_cast<double>(std::count(outside.begin(), outside.end(), 1)) / draws;
  const double gen_freq = static_cast<double>(std::count(gen_violated.begin(), gen_violated.end(), 1)) / draws;
  const std::string tau_detail =
      printf_string("eps=%.3f tau=%.4f gamma=%g N1=%llu N2=%llu cover=%.4f gumbel=%.3g ratio=%.4f cond_c_gumbel=%.4f",
                    eps, tau.tau, tau.gamma, static_cast<unsigned long long>(tau.n1),
                    static_cast<unsigned long long>(tau.n2), tau.cover_term, tau.gumbel_term, tau.ratio_term,
                    tau.condition_c_gumbel);
  const double elapsed = seconds_since(start);

  CriterionResult radius = make_result(5, "one_shot_covering");
  radius.measured = freq;
  radius.threshold = tau.tau + 3.0 * binomial_se(freq, draws);
  radius.passed = tau.feasible && tau.tau <= tau_target && freq <= radius.threshold;
  radius.detail = printf_string("draws=%zu ", draws) + tau_detail;
  radius.seconds = elapsed;

  CriterionResult gen = make_result(6, "one_shot_generalization");
  gen.measured = gen_freq;
  gen.threshold = 0.05 + tau.tau + 3.0 * binomial_se(gen_freq, draws);
  gen.passed = tau.feasible && gen_freq <= gen.threshold;
  gen.detail = printf_string("draws=%zu rhs=%.4f eps=%.3f", draws, rhs, eps);
  gen.seconds = 0.0;
  return {radius, gen};
}

CriterionResult check_appendix_grid(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(7, "appendix_concentration");
  const std::size_t trials = scaled(1000, opt, 50);
  const QuantKernel kernel{1.0};
  out.passed = true;
  out.measured = -1.0;
  std::ostringstream detail;
  detail << "codebooks=" << trials;
  std::size_t point = 0;
  for (std::size_t d : {std::size_t{2}, std::size_t{8}}) {
    const Prior prior{std::vector<double>(d, 0.0), 1.0};
    for (double offset : {0.0, 1.0, 2.0}) {
      std::vector<double> wv(d, 0.0);
      wv[0] = offset;
      const Hypothesis w(wv);
      for (double t : {2.0, 4.0, 8.0}) {
        const auto diag = appendix_claim_check(w, kernel, prior, t, trials, derive_seed(opt.seed, point++, "appendix"),
                                               kDefaultOrcCap, 200000, opt.threads);
        const double ratio = diag.mean_abs_gap / diag.bound;
        if (ratio > out.measured) {
          out.measured = ratio;
          detail << " | worst d=" << d << " |w-mu|=" << offset << " t=" << t << " gap=" << diag.mean_abs_gap
                 << " bound=" << diag.bound;
        }
        out.passed = out.passed && !diag.report.violated;
      }
    }
  }
  // measured is the worst gap / bound ratio; the claim needs it <= 1.
  out.threshold = 1.0;
  out.detail = detail.str();
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_regularizer_sweep(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(8, "regularizer_sweep");
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const std::vector<double> weights{0.0, 0.01, 0.1, 1.0};
  const std::size_t datasets = scaled(20, opt, 5);
  const double second = kernel_second_moment(cfg.task.dim, cfg.kernel);
  constexpr double slack = 1e-6;

  std::vector<std::vector<ModelTerm>> terms(weights.size(), std::vector<ModelTerm>(datasets));
  parallel_for(datasets, opt.threads, [&](std::size_t j) {
    const Dataset s = setup.dataset(j, "reg-dataset");
    const std::uint64_t seed = derive_seed(opt.seed, j, "reg-train");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const Hypothesis w = setup.train(s, seed, weights[k]);
      terms[k][j] = {kl_to_prior(w, cfg.kernel, cfg.prior), b_w(w, cfg.kernel, cfg.prior, cfg.bounds.t)};
    }
  });
  std::vector<double> c_s, budget, rhs;
  std::size_t per_set_breaks = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto bound =
        gen_bound_expectation(terms[k], second, setup.spec.lipschitz_const, cfg.bounds.t, cfg.task.n, cfg.bounds.delta);
    c_s.push_back(bound.c_s);
    budget.push_back(comm_budget(bound.c_s));
    rhs.push_back(bound.rhs);
    if (k > 0)
      for (std::size_t j = 0; j < datasets; ++j)
        if (terms[k][j].kl > terms[k - 1][j].kl + slack) ++per_set_breaks;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < weights.size(); ++k) {
    worst = std::max({worst, c_s[k] - c_s[k - 1], budget[k] - budget[k - 1], rhs[k] - rhs[k - 1]});
  }
  out.measured = worst;
  out.threshold = slack;
  out.passed = worst <= slack && per_set_breaks == 0;
  std::ostringstream detail;
  detail << "datasets=" << datasets << " per_dataset_increases=" << per_set_breaks;
  for (std::size_t k = 0; k < weights.size(); ++k)
    detail << " | lambda=" << weights[k] << " C_S=" << c_s[k] << " budget=" << budget[k] << " rhs=" << rhs[k];
  out.detail = detail.str();
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_precision_sweep(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(9, "precision_sweep");
  const Setup setup(default_config(opt.seed));
  const auto& cfg = setup.cfg;
  const std::vector<PrecisionMode> modes{PrecisionMode::none(), PrecisionMode::quantized(4),
                                         PrecisionMode::quantized(8), PrecisionMode::full()};
  const std::size_t trials = scaled(200, opt, 20);
  // Per trial and mode: risk gap, payload bits, Delta_U.
  std::vector<std::vector<double>> gap(modes.size(), std::vector<double>(trials)), bits = gap, du = gap;
  parallel_for(trials, opt.threads, [&](std::size_t i) {
    const Dataset s = setup.dataset(i, "prec-dataset");
    const Hypothesis w = setup.train(s, derive_seed(opt.seed, i, "prec-train"));
    const std::uint64_t cb_seed = derive_seed(opt.seed, i, "prec-codebook");
    const Codebook cb(cfg.prior, SharedRandomness{cb_seed});
    const auto enc = encode_orc(w, cb, cfg.bounds.t, cfg.kernel, derive_seed(opt.seed, i, "prec-encoder"));
    const Hypothesis codeword = cb.codeword(enc.index);
    const double emp = empirical_risk(s, w, setup.spec);
    const IndexCode code = IndexCode::elias_delta();
    const Receiver server(cfg.prior, SharedRandomness{cb_seed}, code);
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto payload = quantize_residual(w, codeword, modes[k]);
      const Hypothesis decoded = server.receive(encode_message({enc.index, payload}, code));
      gap[k][i] = std::abs(empirical_risk(s, decoded, setup.spec) - emp);
      bits[k][i] = static_cast<double>(payload.payload_bits);
      du[k][i] = std::max(0.0, distance(w.coords(), codeword.coords()) - distance(w.coords(), decoded.coords()));
    }
  });
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  std::ostringstream detail;
  detail << "trials=" << trials;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    detail << " | " << modes[k].to_string() << " gap=" << mean(gap[k]) << " bits=" << mean(bits[k])
           << " delta_u=" << mean(du[k]);
    if (k == 0) continue;
    const double g = mean(gap[k]) - mean(gap[k - 1]);
    const double d = mean(du[k - 1]) - mean(du[k]);
    worst = std::max({worst, g, d});
    ok = ok && g <= 1e-12 && d <= 1e-12 && mean(bits[k]) > mean(bits[k - 1]);
  }
  out.measured = worst;
  out.threshold = 1e-12;
  out.passed = ok;
  out.detail = detail.str();
  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_unit_level(const CampaignOptions& opt) {
  const auto start = Clock::now();
  CriterionResult out = make_result(10, "unit_level");
  std::vector<std::string> failures;

  // Codec round trip, one index at a time and as one concatenated stream.
  const std::vector<IndexCode> codes{IndexCode::elias_delta(), IndexCode::zipf(1.05), IndexCode::zipf(1.5),
                                     IndexCode::zipf(2.0), IndexCode::zipf(4.0), IndexCode::zipf_for_rate(3.0)};
  for (const auto& code : codes) {
    BitString stream;
    bool ok = true;
    for (std::uint64_t k = 1; k <= 10000; ++k) {
      const BitString bits = encode_index(k, code);
      ok = ok && bits.size() == code_length_bits(k, code) && decode_index(bits, code) == k;
      stream.append(bits);
    }
    BitReader reader(stream);
    for (std::uint64_t k = 1; k <= 10000 && ok; ++k) ok = decode_index(reader, code) == k;
    ok = ok && reader.done();
    if (!ok) failures.push_back("codec " + code.to_string());
  }

  // Gradient against central differences of the objective.
  {
    Rng rng(derive_seed(opt.seed, 0, "unit-grad"));
    const auto [s, task] = make_synthetic_task(6, 50, 0.1, opt.seed);
    const Prior prior{std::vector<double>(6, 0.1), 1.5};
    const QuantKernel kernel{0.5};
    const LossSpec spec = task.loss_spec();
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> w(6), g(6), fd(6);
      for (auto& v : w) v = 2.0 * rng.normal();
      objective_gradient(s, {}, w, 0.05, prior, g);
      for (std::size_t j = 0; j < 6; ++j) {
        const double h = 1e-5;
        auto wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        fd[j] = (training_objective(s, wp, 0.05, prior, kernel, spec) -
                 training_objective(s, wm, 0.05, prior, kernel, spec)) / (2.0 * h);
      }
      double diff = 0.0;
      for (std::size_t j = 0; j < 6; ++j) diff += (g[j] - fd[j]) * (g[j] - fd[j]);
      worst = std::max(worst, std::sqrt(diff) / std::max(norm(g), 1e-12));
    }
    if (!(worst <= 1e-5)) failures.push_back(printf_string("gradient rel err %.3g", worst));
  }

  // Lipschitz probe: |l(w, z) - l(w', z)| <= L ||w - w'|| with ||x|| <= B.
  {
    Rng rng(derive_seed(opt.seed, 0, "unit-lipschitz"));
    const LossSpec spec = LossSpec::for_feature_bound(2.0);
    const std::size_t d = 5;
    std::vector<double> w(d), w2(d), x(d);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double scale = std::exp(rng.normal());
      for (std::size_t j = 0; j < d; ++j) {
        w[j] = scale * rng.normal();
        w2[j] = w[j] + 0.1 * scale * rng.normal();
        x[j] = rng.normal();
      }
      const double r = spec.feature_bound * rng.uniform() / norm(x);
      for (auto& v : x) v *= r;
      const std::uint8_t y = rng.uniform() < 0.5 ? 1 : 0;
      const double lhs = std::abs(loss(x, y, w, spec) - loss(x, y, w2, spec));
      worst = std::max(worst, lhs - spec.lipschitz_const * distance(w, w2));
    }
    if (worst > 1e-12) failures.push_back(printf_string("lipschitz excess %.3g", worst));
  }

  // Two independently built codebooks agree bit for bit, in any access order.
  {
    const Prior prior{std::vector<double>{0.5, -1.0, 0.0, 2.0, 0.25, -0.75, 1.0, 0.0}, 1.7};
    const SharedRandomness rand{derive_seed(opt.seed, 0, "unit-codebook")};
    const Codebook a(prior, rand);
    const Codebook b(Prior{prior.mean, prior.variance}, SharedRandomness{rand.master_seed});
    constexpr std::uint64_t words = 10000;
    std::vector<double> forward(words * 8), cw(8);
    for (std::uint64_t j = 1; j <= words; ++j) a.codeword_into(j, std::span<double>(forward).subspan((j - 1) * 8, 8));
    bool same = true;
    for (std::uint64_t j = words; j >= 1 && same; --j) {
      b.codeword_into(j, cw);
      same = std::memcmp(cw.data(), forward.data() + (j - 1) * 8, 8 * sizeof(double)) == 0;
    }
    if (!same) failures.push_back("codebook mismatch");
  }

  out.passed = failures.empty();
  out.measured = static_cast<double>(failures.size());
  out.threshold = 0.0;
  std::ostringstream detail;
  detail << "codec K<=10000 x " << codes.size() << " codes; gradient; 10000 Lipschitz triples; codebook 10000 words";
  for (const auto& f : failures) detail << " | FAIL " << f;
  out.detail = detail.str();
  out.seconds = seconds_since(start);
  return out;
}

std::vector<CriterionResult> run_all_checks(const CampaignOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> all;
  auto add = [&](CriterionResult r) {
    if (on_result) on_result(r);
    all.push_back(std::move(r));
  };
  add(check_orc_mrc_equivalence(opt));
  add(check_empirical_risk_bound(opt));
  add(check_expectation_bound(opt));
  add(check_comm_budget(opt));
  for (auto& r : check_one_shot(opt)) add(std::move(r));
  add(check_appendix_grid(opt));
  add(check_regularizer_sweep(opt));
  add(check_precision_sweep(opt));
  add(check_unit_level(opt));
  return all;
}

std::string format_result(const CriterionResult& r) {
  return printf_string("%s [%d] %s: measured=%.6g threshold=%.6g (%.1fs) %s", r.passed ? "PASS" : "FAIL", r.id,
                       r.name.c_str(), r.measured, r.threshold, r.seconds, r.detail.c_str());
}

}  // namespace mincomm
