#pragma once

// Hypotheses, datasets, the bounded Lipschitz loss and the three risks.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mincomm/rng.hpp"

namespace mincomm {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

/// A d-dimensional real parameter vector with finite entries, d > 0.
class Hypothesis {
 public:
  Hypothesis() = default;
  explicit Hypothesis(std::vector<double> coords);

  static Hypothesis zeros(std::size_t dim);

  std::size_t dim() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& vec() const { return coords_; }

  bool operator==(const Hypothesis&) const = default;

 private:
  std::vector<double> coords_;
};

Hypothesis operator+(const Hypothesis& a, std::span<const double> b);
std::vector<double> operator-(const Hypothesis& a, const Hypothesis& b);

struct Sample {
  std::vector<double> x;
  std::uint8_t y = 0;
};

struct SampleView {
  std::span<const double> x;
  std::uint8_t y;
};

/// n >= 1 labelled samples sharing a feature dimension, stored row-major.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> features, std::vector<std::uint8_t> labels);
  explicit Dataset(const std::vector<Sample>& samples);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  SampleView operator[](std::size_t i) const {
    return {std::span<const double>(features_).subspan(i * dim_, dim_), labels_[i]};
  }
  const std::vector<double>& features() const { return features_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
};

struct LossSpec {
  std::string kind = "sigmoid-abs";
  double lipschitz_const = 0.5;
  double feature_bound = 2.0;

  /// sigmoid' <= 1/4, so |l(z,w) - l(z,w')| <= (B_x / 4) ||w - w'||.
  static LossSpec for_feature_bound(double feature_bound);
};

double sigmoid(double v);

/// |sigmoid(w.x) - y|, always in [0, 1].
double loss(std::span<const double> x, std::uint8_t y, std::span<const double> w, const LossSpec& spec);
double loss(const SampleView& z, const Hypothesis& w, const LossSpec& spec);
double loss(const Sample& z, const Hypothesis& w, const LossSpec& spec);

double empirical_risk(const Dataset& s, std::span<const double> w, const LossSpec& spec);
double empirical_risk(const Dataset& s, const Hypothesis& w, const LossSpec& spec);

/// Source of i.i.d. samples Z ~ mu. Implementations must be const-callable
/// from many threads with their own Rng.
class DataDistribution {
 public:
  virtual ~DataDistribution() = default;
  virtual std::size_t dim() const = 0;
  virtual void draw(Rng& rng, std::span<double> x, std::uint8_t& y) const = 0;
};

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

RiskEstimate population_risk_mc(const DataDistribution& mu, const Hypothesis& w, std::size_t m,
                                std::uint64_t seed, const LossSpec& spec);

/// pop_risk - empirical_risk(S, w).
double gen_error(const Dataset& s, const Hypothesis& w, double pop_risk, const LossSpec& spec);

}  // namespace mincomm
