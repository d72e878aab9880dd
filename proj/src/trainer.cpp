#include "mincomm/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mincomm/error.hpp"

namespace mincomm {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(kl_weight >= 0.0)) throw ConfigError("kl_weight must be non-negative");
}

std::string TrainConfig::describe() const {
  std::ostringstream os;
  os << "learning_rate=" << learning_rate << " epochs=" << epochs << " batch_size=" << batch_size
     << " kl_weight=" << kl_weight << " seed=" << seed;
  return os.str();
}

SyntheticTask::SyntheticTask(Hypothesis true_w, double feature_bound, double label_noise)
    : true_w_(std::move(true_w)), feature_bound_(feature_bound), label_noise_(label_noise) {
  if (true_w_.empty()) throw ConfigError("task dimension must be > 0");
  if (!(feature_bound_ > 0.0)) throw ConfigError("feature bound must be positive");
  if (!(label_noise_ >= 0.0 && label_noise_ <= 0.5)) throw ConfigError("label noise must lie in [0, 0.5]");
}

SyntheticTask SyntheticTask::make(std::size_t dim, double label_noise, std::uint64_t seed, double true_w_norm,
                                  double feature_bound) {
  if (dim == 0) throw ConfigError("task dimension must be > 0");
  Rng rng(derive_seed(seed, 0, "task"));
  std::vector<double> w(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& v : w) v = rng.normal();
    n = norm(w);
  }
  for (auto& v : w) v *= true_w_norm / n;
  return SyntheticTask(Hypothesis(std::move(w)), feature_bound, label_noise);
}

void SyntheticTask::draw(Rng& rng, std::span<double> x, std::uint8_t& y) const {
  double n = 0.0;
  while (n == 0.0) {
    for (auto& v : x) v = rng.normal();
    n = norm(x);
  }
  const double radius = feature_bound_ * std::pow(rng.uniform(), 1.0 / static_cast<double>(x.size()));
  for (auto& v : x) v *= radius / n;
  y = sigmoid(dot(true_w_.coords(), x)) > 0.5 ? 1 : 0;
  if (rng.uniform() < label_noise_) y = static_cast<std::uint8_t>(1 - y);
}

Dataset SyntheticTask::sample_dataset(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  Rng rng(seed);
  std::vector<double> features(n * dim());
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    draw(rng, std::span<double>(features).subspan(i * dim(), dim()), labels[i]);
  }
  return Dataset(dim(), std::move(features), std::move(labels));
}

std::pair<Dataset, SyntheticTask> make_synthetic_task(std::size_t dim, std::size_t n, double label_noise,
                                                      std::uint64_t seed) {
  auto task = SyntheticTask::make(dim, label_noise, seed);
  auto data = task.sample_dataset(n, derive_seed(seed, 0, "dataset"));
  return {std::move(data), std::move(task)};
}

double training_objective(const Dataset& s, std::span<const double> w, double kl_weight, const Prior& prior,
                          const QuantKernel& kernel, const LossSpec& spec) {
  double value = empirical_risk(s, w, spec);
  if (kl_weight > 0.0) value += kl_weight * kl_to_prior(Hypothesis(std::vector<double>(w.begin(), w.end())), kernel, prior);
  return value;
}

void objective_gradient(const Dataset& s, std::span<const std::size_t> batch, std::span<const double> w,
                        double kl_weight, const Prior& prior, std::span<double> grad) {
  const std::size_t d = w.size();
  if (s.dim() != d || grad.size() != d || prior.dim() != d) throw ConfigError("objective_gradient: dimension mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  auto accumulate = [&](std::size_t i) {
    const auto z = s[i];
    const double p = sigmoid(dot(z.x, w));
    // d/dw |sigmoid(w.x) - y| = sign(p - y) p (1 - p) x; p never equals y.
    const double scale = (z.y ? -1.0 : 1.0) * p * (1.0 - p);
    for (std::size_t j = 0; j < d; ++j) grad[j] += scale * z.x[j];
  };
  std::size_t count = 0;
  if (batch.empty()) {
    for (std::size_t i = 0; i < s.size(); ++i) accumulate(i);
    count = s.size();
  } else {
    for (auto i : batch) accumulate(i);
    count = batch.size();
  }
  for (auto& g : grad) g /= static_cast<double>(count);
  if (kl_weight > 0.0) {
    for (std::size_t j = 0; j < d; ++j) grad[j] += kl_weight * (w[j] - prior.mean[j]) / prior.variance;
  }
}

Hypothesis sgd_train(const Dataset& s, const TrainConfig& cfg, const Prior& prior, const QuantKernel& kernel,
                     const LossSpec& spec) {
  cfg.validate();
  prior.validate();
  if (!(kernel.variance > 0.0)) throw DegenerateKernelError("kernel variance must be positive");
  if (spec.kind != "sigmoid-abs") throw ConfigError("unsupported loss kind: " + spec.kind);
  const std::size_t d = s.dim();
  if (prior.dim() != d) throw ConfigError("prior and dataset dimensions differ");

  Rng rng(cfg.seed);
  std::vector<double> w(d, 0.0);
  std::vector<double> grad(d);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      objective_gradient(s, std::span<const std::size_t>(order).subspan(start, len), w, cfg.kl_weight, prior, grad);
      for (std::size_t j = 0; j < d; ++j) w[j] -= cfg.learning_rate * grad[j];
      const double size = norm(w);
      if (!(size <= 1e6)) throw DivergenceError("SGD diverged (||w|| = " + std::to_string(size) + ") with " + cfg.describe());
    }
  }
  return Hypothesis(std::move(w));
}

}  // namespace mincomm
