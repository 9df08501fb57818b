// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace paoi {

using Rng = std::mt19937_64;

// Uniform draw on [0, 1) built directly from the engine bits so that sample
// streams do not depend on the standard library's distribution code.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Exponential {
  double rate;
};

struct Deterministic {
  double value;
};

// Service (transmission) time distribution. Every variant exposes a sampler
// and a closed-form log moment generating function.
class ServiceModel {
 public:
  static ServiceModel exponential(double rate);
  static ServiceModel exponential_mean(double mean);
  static ServiceModel deterministic(double value);

  // Lambda(theta) = log E[exp(theta V)]. Throws kDomain for theta < 0 or
  // theta >= theta_max().
  double log_mgf(double theta) const;
  double theta_max() const;
  double mean() const;
  double sample(Rng& rng) const;

  const char* kind() const;
  // rate for exponential, value for deterministic
  double parameter() const;
  std::string describe() const;

  const std::variant<Exponential, Deterministic>& variant() const { return v_; }

 private:
  explicit ServiceModel(std::variant<Exponential, Deterministic> v) : v_(v) {}
  std::variant<Exponential, Deterministic> v_;
};

inline double log_mgf(const ServiceModel& model, double theta) {
  return model.log_mgf(theta);
}
inline double theta_max(const ServiceModel& model) { return model.theta_max(); }

struct SystemConfig {
  int n = 1;
  double b = 1.0;
  ServiceModel service = ServiceModel::deterministic(1.0);
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kWeightSumTolerance = 1e-9;

// Scheduling weights: strictly positive, summing to one.
class WeightVector {
 public:
  // Accepts iff every entry is positive and the sum is within 1e-9 of one;
  // the stored vector is renormalized exactly. Throws kValidation otherwise.
  static WeightVector validate(std::span<const double> raw);
  static WeightVector uniform(int n);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }
  double sum_except(std::size_t i) const;

 private:
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {}
  std::vector<double> w_;
};

inline WeightVector validate_weights(std::span<const double> raw) {
  return WeightVector::validate(raw);
}

// Sources are partitioned into contiguous classes: the first sizes[0] sources
// form class 0, the next sizes[1] class 1, and so on.
struct GroupStructure {
  std::vector<int> sizes;

  int total() const;
  int group_of(int source) const;
  int first_source(int group) const;
  void validate(int n) const;
  // Per-source weights when group g receives total weight group_weights[g]
  // split equally among its members.
  WeightVector expand(std::span<const double> group_weights) const;
  // Throws kValidation unless weights are equal within each class.
  void check_equal_within(const WeightVector& mu) const;
};

struct Target {
  double x;    // PAoI threshold
  double eps;  // violation probability target, in (0, 1]
};

struct ViolationSpec {
  std::vector<Target> targets;

  std::size_t size() const { return targets.size(); }
  const Target& operator[](std::size_t i) const { return targets[i]; }
  void validate(int n, double b) const;
};

}  // namespace paoi
