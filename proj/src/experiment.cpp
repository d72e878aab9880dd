#include "mincomm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "mincomm/error.hpp"
#include "mincomm/io.hpp"
#include "mincomm/parallel.hpp"
#include "mincomm/wire.hpp"

namespace mincomm {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError("unknown config key '" + item.key() + "' in " + section);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_if(const std::vector<TrialRecord>& rs, double TrialRecord::*field) {
  double s = 0.0;
  std::size_t c = 0;
  for (const auto& r : rs) {
    if (r.failed) continue;
    s += r.*field;
    ++c;
  }
  return c ? s / static_cast<double>(c) : 0.0;
}

}  // namespace

void ExperimentConfig::resolve() {
  if (task.dim == 0) throw ConfigError("task.dim must be positive");
  if (task.n == 0) throw ConfigError("task.n must be positive");
  if (!(task.label_noise >= 0.0 && task.label_noise <= 0.5)) throw ConfigError("task.label_noise must lie in [0, 0.5]");
  if (!(task.true_w_norm > 0.0)) throw ConfigError("task.true_w_norm must be positive");
  if (!(task.feature_bound > 0.0)) throw ConfigError("task.feature_bound must be positive");
  if (prior.mean.empty()) prior.mean.assign(task.dim, 0.0);
  if (prior.mean.size() != task.dim) throw ConfigError("prior.mean has the wrong dimension");
  prior.validate();
  if (!(kernel.variance > 0.0)) throw ConfigError("kernel.variance must be positive");
  train.validate();
  bounds.n = task.n;
  bounds.lipschitz = loss_spec().lipschitz_const;
  bounds.validate();
  if (index_code != "zipf" && index_code != "elias-delta") throw ConfigError("index_code must be zipf or elias-delta");
  if (trials == 0) throw ConfigError("trials must be positive");
  if (population_samples == 0) throw ConfigError("population_samples must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = {{"dim", cfg.task.dim},
               {"n", cfg.task.n},
               {"label_noise", cfg.task.label_noise},
               {"true_w_norm", cfg.task.true_w_norm},
               {"feature_bound", cfg.task.feature_bound}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"kl_weight", cfg.train.kl_weight}};
  j["prior"] = {{"mean", cfg.prior.mean}, {"variance", cfg.prior.variance}};
  j["kernel"] = {{"variance", cfg.kernel.variance}};
  j["bounds"] = {{"t", cfg.bounds.t},
                 {"delta", cfg.bounds.delta},
                 {"mc_samples", cfg.bounds.mc_samples},
                 {"epsilon_vq", cfg.bounds.epsilon_vq},
                 {"n_vq", cfg.bounds.n_vq},
                 {"tail_measure", to_string(cfg.bounds.tail_measure)},
                 {"ratio_scale", to_string(cfg.bounds.ratio_scale)}};
  j["encoder"] = to_string(cfg.encoder);
  j["precision"] = cfg.precision.to_string();
  j["index_code"] = cfg.index_code;
  j["trials"] = cfg.trials;
  j["population_samples"] = cfg.population_samples;
  j["threads"] = cfg.threads;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "config",
             {"task", "train", "prior", "kernel", "bounds", "encoder", "precision", "index_code", "trials",
              "population_samples", "threads", "master_seed", "output_dir"});
  if (auto it = j.find("task"); it != j.end()) {
    check_keys(*it, "task", {"dim", "n", "label_noise", "true_w_norm", "feature_bound"});
    read(*it, "dim", cfg.task.dim);
    read(*it, "n", cfg.task.n);
    read(*it, "label_noise", cfg.task.label_noise);
    read(*it, "true_w_norm", cfg.task.true_w_norm);
    read(*it, "feature_bound", cfg.task.feature_bound);
  }
  if (auto it = j.find("train"); it != j.end()) {
    check_keys(*it, "train", {"learning_rate", "epochs", "batch_size", "kl_weight"});
    read(*it, "learning_rate", cfg.train.learning_rate);
    read(*it, "epochs", cfg.train.epochs);
    read(*it, "batch_size", cfg.train.batch_size);
    read(*it, "kl_weight", cfg.train.kl_weight);
  }
  if (auto it = j.find("prior"); it != j.end()) {
    check_keys(*it, "prior", {"mean", "variance"});
    read(*it, "mean", cfg.prior.mean);
    read(*it, "variance", cfg.prior.variance);
  }
  if (auto it = j.find("kernel"); it != j.end()) {
    check_keys(*it, "kernel", {"variance"});
    read(*it, "variance", cfg.kernel.variance);
  }
  if (auto it = j.find("bounds"); it != j.end()) {
    check_keys(*it, "bounds", {"t", "delta", "mc_samples", "epsilon_vq", "n_vq", "tail_measure", "ratio_scale"});
    read(*it, "t", cfg.bounds.t);
    read(*it, "delta", cfg.bounds.delta);
    read(*it, "mc_samples", cfg.bounds.mc_samples);
    read(*it, "epsilon_vq", cfg.bounds.epsilon_vq);
    read(*it, "n_vq", cfg.bounds.n_vq);
    std::string text;
    read(*it, "tail_measure", text);
    if (!text.empty()) cfg.bounds.tail_measure = parse_tail_measure(text);
    text.clear();
    read(*it, "ratio_scale", text);
    if (!text.empty()) cfg.bounds.ratio_scale = parse_ratio_scale(text);
  }
  std::string text;
  read(j, "encoder", text);
  if (!text.empty()) cfg.encoder = parse_encoder_kind(text);
  text.clear();
  read(j, "precision", text);
  if (!text.empty()) cfg.precision = PrecisionMode::parse(text);
  read(j, "index_code", cfg.index_code);
  read(j, "trials", cfg.trials);
  read(j, "population_samples", cfg.population_samples);
  read(j, "threads", cfg.threads);
  read(j, "master_seed", cfg.master_seed);
  read(j, "output_dir", cfg.output_dir);
  cfg.resolve();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string canonical_config(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  // Neither changes any output value.
  j.erase("threads");
  j.erase("output_dir");
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineResult run_pipeline(ExperimentConfig cfg) {
  cfg.resolve();
  const auto spec = cfg.loss_spec();
  const auto task = SyntheticTask::make(cfg.task.dim, cfg.task.label_noise, cfg.master_seed, cfg.task.true_w_norm,
                                        cfg.task.feature_bound);
  const std::size_t trials = cfg.trials;
  PipelineResult result;
  result.records.resize(trials);
  std::vector<std::optional<Dataset>> datasets(trials);
  std::vector<std::optional<Hypothesis>> models(trials);
  std::vector<double> elapsed(trials, 0.0);

  // Stage 1: data and training.
  parallel_for(trials, cfg.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    auto& r = result.records[i];
    r.trial_id = i;
    r.dataset_seed = derive_seed(cfg.master_seed, i, "dataset");
    r.train_seed = derive_seed(cfg.master_seed, i, "train");
    r.codebook_seed = derive_seed(cfg.master_seed, i, "codebook");
    r.encoder_seed = derive_seed(cfg.master_seed, i, "encoder");
    try {
      datasets[i] = task.sample_dataset(cfg.task.n, r.dataset_seed);
      TrainConfig tc = cfg.train;
      tc.seed = r.train_seed;
      models[i] = sgd_train(*datasets[i], tc, cfg.prior, cfg.kernel, spec);
      r.kl = kl_to_prior(*models[i], cfg.kernel, cfg.prior);
    } catch (const Error& e) {
      r.failed = true;
      r.error = e.what();
    }
    elapsed[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  std::size_t trained = 0;
  for (const auto& r : result.records) {
    if (r.failed) continue;
    result.c_hat += r.kl;
    ++trained;
  }
  if (trained) result.c_hat /= static_cast<double>(trained);
  result.code = cfg.index_code == "zipf" ? IndexCode::zipf_for_rate(result.c_hat) : IndexCode::elias_delta();
  const IndexCode code = result.code;
  const double second_moment = kernel_second_moment(cfg.task.dim, cfg.kernel);
  const double lip = spec.lipschitz_const;

  // Stage 2: coding, transmission, server-side decoding, measurement.
  parallel_for(trials, cfg.threads, [&](std::size_t i) {
    auto& r = result.records[i];
    if (r.failed) return;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Hypothesis& w = *models[i];
      const Dataset& s = *datasets[i];
      const SharedRandomness rand{r.codebook_seed};
      const std::uint64_t capacity = cfg.encoder == EncoderKind::vq ? cfg.bounds.n_vq : 0;
      const Codebook client_cb(cfg.prior, rand, capacity);

      EncodingResult enc;
      switch (cfg.encoder) {
        case EncoderKind::orc:
          enc = encode_orc(w, client_cb, cfg.bounds.t, cfg.kernel, r.encoder_seed);
          break;
        case EncoderKind::mrc:
          enc = encode_mrc(w, client_cb, orc_candidate_count(r.kl, cfg.bounds.t), cfg.kernel, r.encoder_seed);
          break;
        case EncoderKind::vq:
          enc = encode_vq(w, client_cb, cfg.bounds.n_vq);
          break;
      }
      const Hypothesis codeword = client_cb.codeword(enc.index);
      const PrecisionPayload payload = quantize_residual(w, codeword, cfg.precision);
      const auto bytes = encode_message({enc.index, payload}, code);

      // The server rebuilds everything from the shared seed and the prior.
      const Receiver server(cfg.prior, SharedRandomness{r.codebook_seed}, code);
      const Hypothesis decoded = server.receive(bytes);

      r.index = enc.index;
      r.candidate_count = enc.candidate_count;
      r.candidates_examined = enc.candidates_examined;
      r.index_bits = index_field_bits(enc.index, code);
      r.payload_bits = payload.payload_bits;
      r.message_bytes = bytes.size();
      r.codeword_distance = distance(w.coords(), codeword.coords());
      r.delta_u = r.codeword_distance - distance(w.coords(), decoded.coords());
      if (r.delta_u < -1e-12) throw ContractViolation("precision payload moved the model away from w");
      r.delta_u = std::max(r.delta_u, 0.0);
      r.residual_norm = norm(payload.values);

      r.emp_risk_trained = empirical_risk(s, w, spec);
      r.emp_risk_decoded = empirical_risk(s, decoded, spec);
      const std::uint64_t pop_seed = derive_seed(cfg.master_seed, i, "population");
      r.pop_risk_trained = population_risk_mc(task, w, cfg.population_samples, pop_seed, spec).mean;
      r.pop_risk_decoded = population_risk_mc(task, decoded, cfg.population_samples, pop_seed, spec).mean;
      r.gen_trained = r.pop_risk_trained - r.emp_risk_trained;
      r.gen_decoded = r.pop_risk_decoded - r.emp_risk_decoded;

      r.b = b_w(w, cfg.kernel, cfg.prior, cfg.bounds.t, cfg.bounds.tail_measure);
      if (cfg.encoder == EncoderKind::vq) {
        const double eps = cfg.bounds.epsilon_vq;
        r.emp_bound_rhs = r.emp_risk_trained + 2.0 * lip * (eps - r.delta_u);
        r.emp_bound_vacuous = r.codeword_distance > eps;
        r.gen_bound_rhs = gen_bound_oneshot_rhs(cfg.bounds.n_vq, cfg.task.n, cfg.bounds.delta, lip, eps);
      } else {
        const auto eb = emp_risk_bound_rhs(r.emp_risk_trained, r.b, second_moment, lip, r.delta_u);
        r.emp_bound_rhs = eb.rhs;
        r.emp_bound_vacuous = eb.vacuous;
        r.gen_bound_rhs = gen_bound_decoded_rhs(r.kl, r.b, second_moment, lip, cfg.bounds.t, cfg.task.n,
                                                cfg.bounds.delta, cfg.precision);
      }
    } catch (const Error& e) {
      r.failed = true;
      r.error = e.what();
    }
    r.wall_ms = elapsed[i] + std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  for (const auto& r : result.records)
    if (r.failed) ++result.failures;
  return result;
}

PipelineSummary summarize(const ExperimentConfig& cfg, const PipelineResult& result) {
  PipelineSummary out;
  const auto& rs = result.records;
  const std::string hash = config_hash(cfg);
  std::size_t ok = 0, emp_considered = 0, emp_violations = 0, gen_violations = 0;
  double bits = 0.0, gap = 0.0;
  std::vector<double> emp_lhs, emp_rhs, gen_lhs, gen_rhs;
  for (const auto& r : rs) {
    if (r.failed) continue;
    ++ok;
    bits += static_cast<double>(r.index_bits);
    gap += std::abs(r.emp_risk_decoded - r.emp_risk_trained);
    if (!r.emp_bound_vacuous) {
      ++emp_considered;
      if (r.emp_risk_decoded > r.emp_bound_rhs) ++emp_violations;
      emp_lhs.push_back(r.emp_risk_decoded);
      emp_rhs.push_back(r.emp_bound_rhs);
    }
    if (r.gen_decoded > r.gen_bound_rhs) ++gen_violations;
    gen_lhs.push_back(r.gen_decoded);
    gen_rhs.push_back(r.gen_bound_rhs);
  }
  const double okd = ok ? static_cast<double>(ok) : 1.0;
  const double mean_bits = bits / okd;

  auto report = [&](const char* name, const std::vector<double>& lhs, const std::vector<double>& rhs) {
    if (lhs.empty()) {
      out.reports.push_back(make_report(name, 0.0, 0.0, 0.0, 0.0, 0.0, true));
      return;
    }
    double ml = 0.0;
    for (double v : lhs) ml += v;
    ml /= static_cast<double>(lhs.size());
    // Median: a few near-vacuous trials (1 - sqrt(b) ~ 0) would swamp a mean.
    std::vector<double> sorted = rhs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double mr = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    double ss = 0.0;
    for (double v : lhs) ss += (v - ml) * (v - ml);
    const double se = lhs.size() > 1 ? std::sqrt(ss / static_cast<double>(lhs.size() - 1) / static_cast<double>(lhs.size())) : 0.0;
    out.reports.push_back(make_report(name, mr, ml, ml - 1.96 * se, ml + 1.96 * se, 3.0 * se));
  };
  report("emp_risk_bound", emp_lhs, emp_rhs);
  report("gen_bound_decoded", gen_lhs, gen_rhs);
  if (cfg.encoder != EncoderKind::vq) {
    std::vector<double> nats;
    for (const auto& r : rs)
      if (!r.failed) nats.push_back(static_cast<double>(r.index_bits) * std::log(2.0));
    report("comm_budget", nats, std::vector<double>(nats.size(), comm_budget(result.c_hat)));
  }

  json& j = out.json;
  j["config_hash"] = hash;
  j["trials"] = rs.size();
  j["failures"] = result.failures;
  j["encoder"] = to_string(cfg.encoder);
  j["precision"] = cfg.precision.to_string();
  j["index_code"] = result.code.to_string();
  j["c_hat"] = result.c_hat;
  j["comm_budget_nats"] = comm_budget(result.c_hat);
  j["mean_index_bits"] = mean_bits;
  j["mean_index_nats"] = mean_bits * std::log(2.0);
  j["mean_emp_risk_trained"] = mean_if(rs, &TrialRecord::emp_risk_trained);
  j["mean_emp_risk_decoded"] = mean_if(rs, &TrialRecord::emp_risk_decoded);
  j["mean_emp_risk_gap"] = gap / okd;
  j["mean_gen_trained"] = mean_if(rs, &TrialRecord::gen_trained);
  j["mean_gen_decoded"] = mean_if(rs, &TrialRecord::gen_decoded);
  j["mean_delta_u"] = mean_if(rs, &TrialRecord::delta_u);
  j["mean_residual_norm"] = mean_if(rs, &TrialRecord::residual_norm);
  j["mean_codeword_distance"] = mean_if(rs, &TrialRecord::codeword_distance);
  double payload = 0.0;
  for (const auto& r : rs)
    if (!r.failed) payload += static_cast<double>(r.payload_bits);
  j["mean_payload_bits"] = payload / okd;
  j["emp_bound_violation_rate"] = emp_considered ? static_cast<double>(emp_violations) / static_cast<double>(emp_considered) : 0.0;
  j["emp_bound_nonvacuous_trials"] = emp_considered;
  j["gen_bound_violation_rate"] = ok ? static_cast<double>(gen_violations) / okd : 0.0;
  json reports = json::array();
  for (const auto& r : out.reports) {
    reports.push_back({{"name", r.name},
                       {"rhs", r.rhs},
                       {"lhs", r.lhs},
                       {"ci_low", r.ci_low},
                       {"ci_high", r.ci_high},
                       {"violated", r.violated},
                       {"vacuous", r.vacuous}});
  }
  j["bounds"] = reports;
  return out;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "trial_id,dataset_seed,train_seed,codebook_seed,encoder_seed,failed,error,emp_risk_trained,emp_risk_decoded,"
        "pop_risk_trained,pop_risk_decoded,gen_trained,gen_decoded,kl,b,index,candidate_count,candidates_examined,"
        "index_bits,payload_bits,message_bytes,codeword_distance,delta_u,residual_norm,emp_bound_rhs,"
        "emp_bound_vacuous,gen_bound_rhs,wall_ms\n";
  for (const auto& r : records) {
    std::string err = r.error;
    for (auto& c : err)
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    os << r.trial_id << ',' << r.dataset_seed << ',' << r.train_seed << ',' << r.codebook_seed << ','
       << r.encoder_seed << ',' << (r.failed ? 1 : 0) << ',' << err << ',' << fmt(r.emp_risk_trained) << ','
       << fmt(r.emp_risk_decoded) << ',' << fmt(r.pop_risk_trained) << ',' << fmt(r.pop_risk_decoded) << ','
       << fmt(r.gen_trained) << ',' << fmt(r.gen_decoded) << ',' << fmt(r.kl) << ',' << fmt(r.b) << ',' << r.index
       << ',' << r.candidate_count << ',' << r.candidates_examined << ',' << r.index_bits << ',' << r.payload_bits
       << ',' << r.message_bytes << ',' << fmt(r.codeword_distance) << ',' << fmt(r.delta_u) << ','
       << fmt(r.residual_norm) << ',' << fmt(r.emp_bound_rhs) << ',' << (r.emp_bound_vacuous ? 1 : 0) << ','
       << fmt(r.gen_bound_rhs) << ',' << fmt(r.wall_ms) << '\n';
  }
  return os.str();
}

std::string bounds_csv(const std::vector<BoundReport>& reports, const std::string& hash) {
  std::ostringstream os;
  os << "name,rhs,lhs,ci_low,ci_high,violated,vacuous,config_hash\n";
  for (const auto& r : reports) {
    os << r.name << ',' << fmt(r.rhs) << ',' << fmt(r.lhs) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ','
       << (r.violated ? 1 : 0) << ',' << (r.vacuous ? 1 : 0) << ',' << hash << '\n';
  }
  return os.str();
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PipelineResult& result,
                   const PipelineSummary& summary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto put = [&](const char* name, const std::string& text) {
    const auto& s = text;
    write_file(dir / name, std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  put("trials.csv", trials_csv(result.records));
  put("bounds.csv", bounds_csv(summary.reports, config_hash(cfg)));
  put("config.echo.json", to_json(cfg).dump(2) + "\n");
  put("summary.json", summary.json.dump(2) + "\n");
}

}  // namespace mincomm
