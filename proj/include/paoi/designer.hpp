// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paoi/bounds.hpp"
#include "paoi/model.hpp"
#include "paoi/simulator.hpp"

namespace paoi {

struct DesignerConfig {
  double delta = 0.01;
  PmfMode pmf = PmfMode::kFog;
  Aggregation aggregation = Aggregation::kUnion;
  ThetaSearch search;
  // Randomized-S: use the fixed-point iteration on the admissibility interval
  // instead of the plain weight-grid scan.
  bool fixed_point = false;
  int max_fixed_point_iterations = 50;

  void validate() const;
};

struct TraceStep {
  int source;
  double weight;
  double theta_star;
  double bound;
  int evaluations;
};

struct DesignOutcome {
  std::string algorithm;
  bool feasible = false;
  std::optional<WeightVector> weights;
  // per source, in the caller's order
  std::vector<double> certified_bounds;
  std::vector<double> theta_star;
  // minimal grid weights before any redistribution (Randomized-S)
  std::vector<double> minimal_weights;
  // processing order: order[p] is the caller's index handled at step p
  std::vector<int> order;
  std::vector<TraceStep> trace;
  int failing_source = -1;
  double tightest_bound = 1.0;
  std::string reason;
  int bound_evaluations = 0;
};

// Sequential weight design from the long-regime bound with the ell = n - 1
// reduction and the saddlepoint pmf.
DesignOutcome randomized_l(const SystemConfig& config, const ViolationSpec& targets,
                           const DesignerConfig& dcfg);

// Per-source minimal weights from the short-regime bound, then equal
// redistribution of any slack.
DesignOutcome randomized_s(const SystemConfig& config, const ViolationSpec& targets,
                           const DesignerConfig& dcfg);

struct ShortWeightInterval {
  double lo;
  double hi;
  bool valid;  // false when exp(-theta (x - b)) <= eps
};

// Weight interval implied at a fixed theta: lo = 1 - exp(-Lambda), and the
// upper end eps (1 - e^Lambda) / (e^Lambda (e^{-theta (x - b)} - eps)).
ShortWeightInterval short_weight_interval(double x, double b, const ServiceModel& service,
                                          double eps, double theta);

enum class Verifier { kSimulate, kBound };

struct OptSearchOptions {
  double grid_step = 0.1;
  Verifier verifier = Verifier::kSimulate;
  std::uint64_t samples_per_source = 100000;
  std::uint64_t warmup_updates = 10;
  // cap on simulated PAoI samples summed over all candidates; 0 = no cap
  std::uint64_t sample_budget = 0;
  double sigmas = 3.0;
  int workers = 1;
};

struct SourceCheck {
  double p_hat = 0.0;
  double ci_halfwidth = 0.0;
  std::uint64_t count = 0;  // samples behind p_hat (0 for the bound verifier)
};

struct OptCandidate {
  std::vector<double> group_weights;
  std::vector<SourceCheck> checks;
};

struct OptVerdict {
  bool feasible;
  bool below_floor;  // some eps is below the 3/m resolution of the samples
};

// Verifier outcome for one candidate against targets: simulated candidates
// pass when p_hat + sigmas * ci <= eps for every source and every eps is at
// least 3 / m; bound candidates pass when the bound is <= eps.
OptVerdict judge_candidate(const OptCandidate& c, const ViolationSpec& targets,
                           Verifier verifier, double sigmas = 3.0);

struct OptSearchResult {
  std::vector<OptCandidate> candidates;
  std::vector<std::size_t> feasible;
  // per group, the feasible candidate with the smallest weight for that group
  std::vector<std::size_t> frontier;
  std::uint64_t samples_used = 0;
};

// Every composition of the group weights on the grid (each a positive
// multiple of grid_step, summing to one), verified per source at x_i.
std::vector<OptCandidate> evaluate_group_grid(const SystemConfig& config,
                                              const ViolationSpec& targets,
                                              const GroupStructure& groups,
                                              const OptSearchOptions& options,
                                              std::uint64_t* samples_used = nullptr);

OptSearchResult select_feasible(std::vector<OptCandidate> candidates, const ViolationSpec& targets,
                                const OptSearchOptions& options);

OptSearchResult optimal_search(const SystemConfig& config, const ViolationSpec& targets,
                               const GroupStructure& groups, const OptSearchOptions& options);

std::string design_report_json(const DesignOutcome& outcome, const ViolationSpec& targets);

}  // namespace paoi
