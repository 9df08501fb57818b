// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paoi/model.hpp"
#include "paoi/wallenius.hpp"

namespace paoi {

struct ThetaSearch {
  enum class Mode { kGrid, kGoldenSection };
  Mode mode = Mode::kGoldenSection;
  double theta_lo = 1e-6;
  // Upper end of the search. Unset selects theta_max (1 - 1e-6) for
  // distributions with a finite MGF domain and kUnboundedThetaScale / E[V]
  // otherwise.
  std::optional<double> theta_hi;
  int grid_points = 400;
  double tolerance = 1e-8;

  // Resolved [lo, hi] for a service model; throws kDomain if empty.
  std::pair<double, double> domain(const ServiceModel& service) const;
};

inline constexpr double kUnboundedThetaScale = 50.0;

struct ThetaOptimum {
  double theta;
  double value;
};

// Maximizes a concave function of theta over [lo, hi]: grid scan, then (in
// golden-section mode) refinement inside the bracketing grid cell. The left
// endpoint is always evaluated.
ThetaOptimum maximize_over_theta(const std::function<double(double)>& objective, double lo,
                                 double hi, const ThetaSearch& search);

struct BoundResult {
  double value = 1.0;      // min(raw, 1)
  double raw_value = 1.0;  // exp(log_value)
  double log_value = 0.0;
  double theta_star = 0.0;
  int argmax_ell = -1;
  bool admissible = true;
  bool vacuous = false;
  std::map<std::string, double> diagnostics;
};

enum class EllStrategy { kExhaustive, kLemma4 };

// How the per-ell exponents combine across ell. kUnion uses
// sum_ell exp(f) <= n max exp(f), i.e. log n + max f. kAsPrinted multiplies
// the maximum by n, i.e. n max f.
enum class Aggregation { kUnion, kAsPrinted };

const char* aggregation_name(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

// log sum_{y in S_{i,ell}} g(y) mu_i / (1 - sum_{j drawn} mu_j): the log
// probability that source i is served right after exactly ell other sources.
double event_log_probability(int source, int ell, const WeightVector& mu, PmfMode mode,
                             const GroupStructure* groups = nullptr);

// (ell + 2) Lambda(theta) + event_log_probability(...)
double f_exponent(int source, int ell, double theta, const ServiceModel& service,
                  const WeightVector& mu, PmfMode mode, const GroupStructure* groups = nullptr);

struct Theorem1Options {
  ThetaSearch search;
  EllStrategy ell_strategy = EllStrategy::kExhaustive;
  PmfMode pmf = PmfMode::kQuadrature;
  Aggregation aggregation = Aggregation::kUnion;
  const GroupStructure* groups = nullptr;
};

// Long-sampling-period bound exp(-sup_theta {theta (x - b) - n M(theta)})
// (as printed) or exp(-sup_theta {theta (x - b) - log n - M(theta)}) (union),
// with M(theta) = max_ell f(ell) or f(n - 1) under the lemma4 strategy.
BoundResult theorem1_bound(int source, double x, const SystemConfig& config,
                           const WeightVector& mu, const Theorem1Options& options);

// Supremum of theta with Lambda(theta) < log(1 / (1 - mu_i)); theta_max when mu_i = 1.
double admissible_theta_sup(const ServiceModel& service, double mu_i);

// Short-sampling-period bound: inf over admissible theta of
// exp(-theta (x - b)) e^Lambda mu_i / (1 - e^Lambda (1 - mu_i)).
BoundResult theorem2_bound(double mu_i, double x, double b, const ServiceModel& service,
                           const ThetaSearch& search = {});
BoundResult theorem2_bound(int source, double x, const SystemConfig& config,
                           const WeightVector& mu, const ThetaSearch& search = {});

struct RateResult {
  double rate;
  double theta_star;
};

// Decay-rate proxy for the long regime evaluated at n_ref = mu.size():
// sup_theta {theta (x' - b') - (log n_ref + f(n_ref - 1)) / n_ref}.
RateResult corollary1_rate(int source, double x_prime, double b_prime, const WeightVector& mu,
                           const ServiceModel& service, const ThetaSearch& search = {},
                           PmfMode mode = PmfMode::kQuadrature,
                           const GroupStructure* groups = nullptr);

// Short-regime decay rate: theta_adm (x' - b').
double corollary2_rate(double x_prime, double b_prime, double mu_i, const ServiceModel& service);

}  // namespace paoi
