#include "mincomm/hypothesis.hpp"

#include <cmath>

#include "mincomm/error.hpp"

namespace mincomm {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ConfigError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

Hypothesis::Hypothesis(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw ConfigError("hypothesis must have dimension > 0");
  for (double v : coords_) {
    if (!std::isfinite(v)) throw ConfigError("hypothesis has a non-finite entry");
  }
}

Hypothesis Hypothesis::zeros(std::size_t dim) { return Hypothesis(std::vector<double>(dim, 0.0)); }

Hypothesis operator+(const Hypothesis& a, std::span<const double> b) {
  require_same_dim(a.dim(), b.size(), "add");
  std::vector<double> out(a.vec());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return Hypothesis(std::move(out));
}

std::vector<double> operator-(const Hypothesis& a, const Hypothesis& b) {
  require_same_dim(a.dim(), b.dim(), "subtract");
  std::vector<double> out(a.vec());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Dataset::Dataset(std::size_t dim, std::vector<double> features, std::vector<std::uint8_t> labels)
    : dim_(dim), features_(std::move(features)), labels_(std::move(labels)) {
  if (dim_ == 0) throw ConfigError("dataset dimension must be > 0");
  if (labels_.empty()) throw ConfigError("dataset must contain at least one sample");
  if (features_.size() != labels_.size() * dim_) throw ConfigError("dataset feature block has wrong size");
  for (double v : features_) {
    if (!std::isfinite(v)) throw ConfigError("dataset has a non-finite feature");
  }
  for (auto y : labels_) {
    if (y > 1) throw ConfigError("dataset labels must be 0 or 1");
  }
}

Dataset::Dataset(const std::vector<Sample>& samples) {
  if (samples.empty()) throw ConfigError("dataset must contain at least one sample");
  const std::size_t d = samples.front().x.size();
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  features.reserve(samples.size() * d);
  for (const auto& s : samples) {
    require_same_dim(d, s.x.size(), "dataset");
    features.insert(features.end(), s.x.begin(), s.x.end());
    labels.push_back(s.y);
  }
  *this = Dataset(d, std::move(features), std::move(labels));
}

LossSpec LossSpec::for_feature_bound(double feature_bound) {
  if (!(feature_bound > 0.0)) throw ConfigError("feature bound must be positive");
  return LossSpec{"sigmoid-abs", feature_bound / 4.0, feature_bound};
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double loss(std::span<const double> x, std::uint8_t y, std::span<const double> w, const LossSpec& spec) {
  if (spec.kind != "sigmoid-abs") throw ConfigError("unsupported loss kind: " + spec.kind);
  const double s = sigmoid(dot(x, w));
  return y ? 1.0 - s : s;
}

double loss(const SampleView& z, const Hypothesis& w, const LossSpec& spec) {
  return loss(z.x, z.y, w.coords(), spec);
}

double loss(const Sample& z, const Hypothesis& w, const LossSpec& spec) {
  return loss(std::span<const double>(z.x), z.y, w.coords(), spec);
}

double empirical_risk(const Dataset& s, std::span<const double> w, const LossSpec& spec) {
  if (s.size() == 0) throw ConfigError("empirical risk of an empty dataset");
  require_same_dim(s.dim(), w.size(), "empirical_risk");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto z = s[i];
    acc += loss(z.x, z.y, w, spec);
  }
  return acc / static_cast<double>(s.size());
}

double empirical_risk(const Dataset& s, const Hypothesis& w, const LossSpec& spec) {
  return empirical_risk(s, w.coords(), spec);
}

RiskEstimate population_risk_mc(const DataDistribution& mu, const Hypothesis& w, std::size_t m,
                                std::uint64_t seed, const LossSpec& spec) {
  if (m == 0) throw ConfigError("population risk needs m >= 1");
  require_same_dim(mu.dim(), w.dim(), "population_risk_mc");
  Rng rng(seed);
  std::vector<double> x(w.dim());
  std::uint8_t y = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mu.draw(rng, x, y);
    const double v = loss(std::span<const double>(x), y, w.coords(), spec);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(m);
  const double mean = sum / n;
  const double var = m > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), m};
}

double gen_error(const Dataset& s, const Hypothesis& w, double pop_risk, const LossSpec& spec) {
  if (!(pop_risk >= 0.0 && pop_risk <= 1.0)) throw ConfigError("population risk must lie in [0, 1]");
  return pop_risk - empirical_risk(s, w, spec);
}

}  // namespace mincomm
