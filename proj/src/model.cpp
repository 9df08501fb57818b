// SPDX-License-Identifier: Apache-2.0
#include "paoi/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "paoi/errors.hpp"

namespace paoi {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kNoRoot: return "NoRoot";
    case ErrorCode::kInvalidCurvature: return "InvalidCurvature";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInsufficientRecords: return "InsufficientRecords";
    case ErrorCode::kRegimeViolated: return "RegimeViolated";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

ServiceModel ServiceModel::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::kValidation, "exponential service rate must be positive");
  }
  return ServiceModel(Exponential{rate});
}

ServiceModel ServiceModel::exponential_mean(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::kValidation, "exponential service mean must be positive");
  }
  return ServiceModel(Exponential{1.0 / mean});
}

ServiceModel ServiceModel::deterministic(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kValidation, "deterministic service time must be positive");
  }
  return ServiceModel(Deterministic{value});
}

double ServiceModel::log_mgf(double theta) const {
  if (!(theta >= 0.0)) {
    throw Error(ErrorCode::kDomain, "log_mgf: theta must be nonnegative");
  }
  if (theta >= theta_max()) {
    throw Error(ErrorCode::kDomain, "log_mgf: theta outside the MGF domain");
  }
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return -std::log1p(-theta / e.rate); },
          [&](const Deterministic& d) { return theta * d.value; },
      },
      v_);
}

double ServiceModel::theta_max() const {
  return std::visit(
      Overloaded{
          [](const Exponential& e) { return e.rate; },
          [](const Deterministic&) { return std::numeric_limits<double>::infinity(); },
      },
      v_);
}

double ServiceModel::mean() const {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const Deterministic& d) { return d.value; },
                    },
                    v_);
}

double ServiceModel::sample(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return -std::log1p(-uniform01(rng)) / e.rate; },
          [](const Deterministic& d) { return d.value; },
      },
      v_);
}

const char* ServiceModel::kind() const {
  return std::holds_alternative<Exponential>(v_) ? "exponential" : "deterministic";
}

double ServiceModel::parameter() const {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return e.rate; },
                        [](const Deterministic& d) { return d.value; },
                    },
                    v_);
}

std::string ServiceModel::describe() const {
  std::ostringstream os;
  os.precision(9);
  if (std::holds_alternative<Exponential>(v_)) {
    os << "exponential(rate=" << parameter() << ")";
  } else {
    os << "deterministic(value=" << parameter() << ")";
  }
  return os.str();
}

void SystemConfig::validate() const {
  if (n < 1) throw Error(ErrorCode::kConfig, "n must be at least 1");
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw Error(ErrorCode::kConfig, "sampling period b must be positive");
  }
}

WeightVector WeightVector::validate(std::span<const double> raw) {
  if (raw.empty()) throw Error(ErrorCode::kValidation, "weight vector is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0) || !std::isfinite(raw[i])) {
      std::ostringstream os;
      os << "weight " << i << " is nonpositive (" << raw[i] << ")";
      throw Error(ErrorCode::kValidation, os.str());
    }
    sum += raw[i];
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    std::ostringstream os;
    os.precision(12);
    os << "weights sum to " << sum << ", not 1";
    throw Error(ErrorCode::kValidation, os.str());
  }
  std::vector<double> w(raw.begin(), raw.end());
  for (double& v : w) v /= sum;
  return WeightVector(std::move(w));
}

WeightVector WeightVector::uniform(int n) {
  if (n < 1) throw Error(ErrorCode::kValidation, "uniform weights need n >= 1");
  return WeightVector(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

double WeightVector::sum_except(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < w_.size(); ++j) {
    if (j != i) s += w_[j];
  }
  return s;
}

int GroupStructure::total() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }

int GroupStructure::group_of(int source) const {
  int start = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    if (source < start + sizes[g]) return static_cast<int>(g);
    start += sizes[g];
  }
  throw Error(ErrorCode::kDomain, "source index outside the group structure");
}

int GroupStructure::first_source(int group) const {
  int start = 0;
  for (int g = 0; g < group; ++g) start += sizes[static_cast<std::size_t>(g)];
  return start;
}

void GroupStructure::validate(int n) const {
  if (sizes.empty()) throw Error(ErrorCode::kConfig, "group structure has no groups");
  for (int s : sizes) {
    if (s < 1) throw Error(ErrorCode::kConfig, "group sizes must be positive");
  }
  if (total() != n) {
    throw Error(ErrorCode::kConfig, "group sizes must sum to n");
  }
}

WeightVector GroupStructure::expand(std::span<const double> group_weights) const {
  if (group_weights.size() != sizes.size()) {
    throw Error(ErrorCode::kValidation, "need one weight per group");
  }
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(total()));
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    for (int k = 0; k < sizes[g]; ++k) w.push_back(group_weights[g] / sizes[g]);
  }
  return WeightVector::validate(w);
}

void GroupStructure::check_equal_within(const WeightVector& mu) const {
  validate(static_cast<int>(mu.size()));
  int start = 0;
  for (int s : sizes) {
    for (int k = 1; k < s; ++k) {
      double a = mu[static_cast<std::size_t>(start)];
      double c = mu[static_cast<std::size_t>(start + k)];
      if (std::abs(a - c) > 1e-12 * std::max(a, c)) {
        throw Error(ErrorCode::kValidation, "weights differ within a group");
      }
    }
    start += s;
  }
}

void ViolationSpec::validate(int n, double b) const {
  if (static_cast<int>(targets.size()) != n) {
    throw Error(ErrorCode::kConfig, "need one target per source");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Target& t = targets[i];
    if (std::isnan(t.eps) || !(t.eps > 0.0) || t.eps > 1.0) {
      throw Error(ErrorCode::kConfig, "target eps must lie in (0, 1]");
    }
    if (!(t.x > b) || !std::isfinite(t.x)) {
      std::ostringstream os;
      os << "target x for source " << i << " must exceed the sampling period";
      throw Error(ErrorCode::kConfig, os.str());
    }
  }
}

}  // namespace paoi
