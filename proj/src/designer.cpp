// SPDX-License-Identifier: Apache-2.0
#include "paoi/designer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "paoi/errors.hpp"
#include "parallel.hpp"

namespace paoi {

namespace {

constexpr double kSumSlack = 1e-9;

int grid_steps(double delta) { return static_cast<int>(std::floor(1.0 / delta + 1e-9)); }

void check_targets(const SystemConfig& config, const ViolationSpec& targets) {
  config.validate();
  if (static_cast<int>(targets.size()) != config.n) {
    throw Error(ErrorCode::kConfig, "one target per source is required");
  }
  targets.validate(config.n, config.b);
}

Theorem1Options long_options(const DesignerConfig& dcfg) {
  Theorem1Options o;
  o.search = dcfg.search;
  o.ell_strategy = EllStrategy::kLemma4;
  o.pmf = dcfg.pmf;
  o.aggregation = dcfg.aggregation;
  return o;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void DesignerConfig::validate() const {
  if (!(delta > 0.0) || delta > 0.1) {
    throw Error(ErrorCode::kConfig, "grid step must lie in (0, 0.1]");
  }
  if (max_fixed_point_iterations < 1) {
    throw Error(ErrorCode::kConfig, "fixed-point iteration cap must be positive");
  }
}

DesignOutcome randomized_l(const SystemConfig& config, const ViolationSpec& targets,
                           const DesignerConfig& dcfg) {
  check_targets(config, targets);
  dcfg.validate();
  const int n = config.n;
  const auto nz = static_cast<std::size_t>(n);
  const Theorem1Options opts = long_options(dcfg);

  DesignOutcome out;
  out.algorithm = "randomized-l";
  out.order.resize(nz);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](int a, int b) {
    return targets[static_cast<std::size_t>(a)].eps < targets[static_cast<std::size_t>(b)].eps;
  });

  std::vector<double> w(nz, 1.0 / n);
  out.theta_star.assign(nz, 0.0);
  double assigned = 0.0;
  const int steps = grid_steps(dcfg.delta);

  // candidate weights: sources before step p fixed, source order[p] at mu,
  // the rest sharing what is left equally
  auto trial = [&](int p, double mu) {
    std::vector<double> v(nz);
    const double rest = (1.0 - assigned - mu) / (n - p - 1);
    for (int q = 0; q < n; ++q) {
      const auto s = static_cast<std::size_t>(out.order[static_cast<std::size_t>(q)]);
      v[s] = q < p ? w[s] : q == p ? mu : rest;
    }
    return WeightVector::validate(v);
  };

  for (int p = 0; p < n; ++p) {
    const int s = out.order[static_cast<std::size_t>(p)];
    const auto su = static_cast<std::size_t>(s);
    const Target& t = targets[su];
    TraceStep step{s, 0.0, 0.0, 1.0, 0};
    bool accepted = false;
    double tightest = std::numeric_limits<double>::infinity();

    if (p + 1 == n) {
      const double mu = 1.0 - assigned;
      if (mu > 0.0) {
        std::vector<double> v(w);
        v[su] = mu;
        const BoundResult r = theorem1_bound(s, t.x, config, WeightVector::validate(v), opts);
        ++step.evaluations;
        step = {s, mu, r.theta_star, r.value, step.evaluations};
        tightest = r.value;
        accepted = r.value <= t.eps;
      }
    } else {
      for (int m = 1; m <= steps; ++m) {
        const double mu = m * dcfg.delta;
        if (!(assigned + mu < 1.0 - 1e-12)) break;
        const BoundResult r = theorem1_bound(s, t.x, config, trial(p, mu), opts);
        ++step.evaluations;
        tightest = std::min(tightest, r.value);
        if (r.value <= t.eps) {
          step = {s, mu, r.theta_star, r.value, step.evaluations};
          accepted = true;
          break;
        }
      }
    }
    out.bound_evaluations += step.evaluations;
    if (!accepted) {
      out.failing_source = s;
      out.tightest_bound = std::isfinite(tightest) ? tightest : 1.0;
      out.reason = "no grid weight certifies source " + std::to_string(s) + " (tightest bound " +
                   fmt(out.tightest_bound) + " > eps " + fmt(t.eps) + ")";
      return out;
    }
    out.trace.push_back(step);
    w[su] = step.weight;
    out.theta_star[su] = step.theta_star;
    assigned += step.weight;
  }

  // certify the final vector; later sources were only checked against an
  // equal split of the remainder while earlier ones were being placed
  const WeightVector final_w = WeightVector::validate(w);
  out.certified_bounds.assign(nz, 1.0);
  for (int s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    const BoundResult r = theorem1_bound(s, targets[su].x, config, final_w, opts);
    ++out.bound_evaluations;
    out.certified_bounds[su] = r.value;
    out.theta_star[su] = r.theta_star;
    if (r.value > targets[su].eps && out.failing_source < 0) {
      out.failing_source = s;
      out.tightest_bound = r.value;
    }
  }
  out.weights = final_w;
  if (out.failing_source >= 0) {
    out.reason = "final weights do not certify source " + std::to_string(out.failing_source);
    return out;
  }
  out.feasible = true;
  return out;
}

namespace {

struct MinimalWeight {
  bool found = false;
  double mu = 1.0;
  BoundResult bound;
  int evaluations = 0;
  double tightest = 1.0;
};

bool certifies(const BoundResult& r, double eps) { return r.admissible && r.value <= eps; }

MinimalWeight scan_grid(const Target& t, double b, const ServiceModel& service,
                        const DesignerConfig& dcfg) {
  MinimalWeight m;
  const int steps = grid_steps(dcfg.delta);
  for (int k = 1; k <= steps + 1; ++k) {
    const double mu = std::min(k * dcfg.delta, 1.0);
    const BoundResult r = theorem2_bound(mu, t.x, b, service, dcfg.search);
    ++m.evaluations;
    if (r.admissible) m.tightest = std::min(m.tightest, r.value);
    if (certifies(r, t.eps)) {
      m = {true, mu, r, m.evaluations, r.value};
      return m;
    }
    if (mu >= 1.0) break;
  }
  return m;
}

// Alternates between the bound's optimizing theta and the smallest weight
// that theta admits, rounded up to the grid.
MinimalWeight fixed_point(const Target& t, double b, const ServiceModel& service,
                          const DesignerConfig& dcfg) {
  MinimalWeight m;
  double mu = dcfg.delta;
  for (int it = 0; it < dcfg.max_fixed_point_iterations; ++it) {
    const BoundResult r = theorem2_bound(mu, t.x, b, service, dcfg.search);
    ++m.evaluations;
    if (r.admissible) m.tightest = std::min(m.tightest, r.value);
    if (certifies(r, t.eps)) {
      m = {true, mu, r, m.evaluations, r.value};
      return m;
    }
    if (mu >= 1.0) break;
    const double lo = -std::expm1(-service.log_mgf(r.theta_star));
    const double on_grid = std::ceil(lo / dcfg.delta - 1e-9) * dcfg.delta;
    mu = std::min(std::max(mu + dcfg.delta, on_grid), 1.0);
  }
  return m;
}

}  // namespace

DesignOutcome randomized_s(const SystemConfig& config, const ViolationSpec& targets,
                           const DesignerConfig& dcfg) {
  check_targets(config, targets);
  dcfg.validate();
  const int n = config.n;
  const auto nz = static_cast<std::size_t>(n);

  DesignOutcome out;
  out.algorithm = dcfg.fixed_point ? "randomized-s-fixed-point" : "randomized-s";
  out.order.resize(nz);
  std::iota(out.order.begin(), out.order.end(), 0);
  out.minimal_weights.assign(nz, 0.0);
  out.theta_star.assign(nz, 0.0);

  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    const MinimalWeight m = dcfg.fixed_point
                                ? fixed_point(targets[su], config.b, config.service, dcfg)
                                : scan_grid(targets[su], config.b, config.service, dcfg);
    out.bound_evaluations += m.evaluations;
    if (!m.found) {
      out.failing_source = s;
      out.tightest_bound = m.tightest;
      out.reason = "no admissible weight certifies source " + std::to_string(s) +
                   " (tightest bound " + fmt(m.tightest) + " > eps " + fmt(targets[su].eps) + ")";
      return out;
    }
    out.trace.push_back({s, m.mu, m.bound.theta_star, m.bound.value, m.evaluations});
    out.minimal_weights[su] = m.mu;
    out.theta_star[su] = m.bound.theta_star;
    total += m.mu;
  }
  if (total > 1.0 + kSumSlack) {
    out.reason = "minimal weights sum to " + fmt(total) + " > 1";
    return out;
  }

  // the bound is decreasing in mu_i, so spreading the slack keeps every
  // certificate; recertify anyway
  std::vector<double> w(out.minimal_weights);
  const double share = (1.0 - total) / n;
  for (double& v : w) v += share;
  const WeightVector final_w = WeightVector::validate(w);
  out.certified_bounds.assign(nz, 1.0);
  for (int s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    const BoundResult r = theorem2_bound(final_w[su], targets[su].x, config.b, config.service,
                                         dcfg.search);
    ++out.bound_evaluations;
    out.certified_bounds[su] = r.value;
    out.theta_star[su] = r.theta_star;
    if (!certifies(r, targets[su].eps) && out.failing_source < 0) {
      out.failing_source = s;
      out.tightest_bound = r.value;
    }
  }
  out.weights = final_w;
  if (out.failing_source >= 0) {
    out.reason = "redistributed weights do not certify source " + std::to_string(out.failing_source);
    return out;
  }
  out.feasible = true;
  return out;
}

ShortWeightInterval short_weight_interval(double x, double b, const ServiceModel& service,
                                          double eps, double theta) {
  if (!(x > b)) throw Error(ErrorCode::kDomain, "threshold must exceed the sampling period");
  const double lam = service.log_mgf(theta);
  const double e_lam = std::exp(lam);
  const double den = e_lam * (std::exp(-theta * (x - b)) - eps);
  ShortWeightInterval r;
  r.lo = -std::expm1(-lam);
  r.valid = den > 0.0;
  r.hi = den != 0.0 ? eps * (-std::expm1(lam)) / den : std::numeric_limits<double>::infinity();
  return r;
}

OptVerdict judge_candidate(const OptCandidate& c, const ViolationSpec& targets, Verifier verifier,
                           double sigmas) {
  if (c.checks.size() != targets.size()) {
    throw Error(ErrorCode::kValidation, "candidate and targets differ in length");
  }
  OptVerdict v{true, false};
  for (std::size_t i = 0; i < c.checks.size(); ++i) {
    const SourceCheck& s = c.checks[i];
    const double eps = targets[i].eps;
    if (verifier == Verifier::kBound) {
      v.feasible = v.feasible && s.p_hat <= eps;
      continue;
    }
    const double floor = s.count > 0 ? 3.0 / static_cast<double>(s.count) : 1.0;
    const double upper = std::max(s.p_hat + sigmas * s.ci_halfwidth, floor);
    if (eps < floor) v.below_floor = true;
    v.feasible = v.feasible && upper <= eps;
  }
  return v;
}

namespace {

void compositions(int groups, int units, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) + 1 == groups) {
    if (units >= 1) {
      cur.push_back(units);
      out.push_back(cur);
      cur.pop_back();
    }
    return;
  }
  const int later = groups - static_cast<int>(cur.size()) - 1;
  for (int k = 1; k <= units - later; ++k) {
    cur.push_back(k);
    compositions(groups, units - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<OptCandidate> evaluate_group_grid(const SystemConfig& config,
                                              const ViolationSpec& targets,
                                              const GroupStructure& groups,
                                              const OptSearchOptions& options,
                                              std::uint64_t* samples_used) {
  check_targets(config, targets);
  groups.validate(config.n);
  if (!(options.grid_step > 0.0) || options.grid_step > 0.5) {
    throw Error(ErrorCode::kConfig, "group grid step must lie in (0, 0.5]");
  }
  const int units = static_cast<int>(std::lround(1.0 / options.grid_step));
  if (std::abs(units * options.grid_step - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfig, "group grid step must divide one");
  }
  const int g = static_cast<int>(groups.sizes.size());
  std::vector<std::vector<int>> grid;
  std::vector<int> cur;
  compositions(g, units, cur, grid);

  std::vector<OptCandidate> out(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (int k : grid[c]) out[c].group_weights.push_back(k * options.grid_step);
  }

  const auto n = static_cast<std::uint64_t>(config.n);
  const std::uint64_t cost =
      options.verifier == Verifier::kSimulate ? grid.size() * n * options.samples_per_source : 0;
  if (options.sample_budget > 0 && cost > options.sample_budget) {
    throw Error(ErrorCode::kBudgetExceeded,
                "search needs " + std::to_string(cost) + " samples, budget is " +
                    std::to_string(options.sample_budget));
  }
  if (samples_used) *samples_used = cost;

  detail::parallel_for(out.size(), options.workers, [&](std::size_t c) {
    const WeightVector mu = groups.expand(out[c].group_weights);
    auto& checks = out[c].checks;
    checks.resize(static_cast<std::size_t>(config.n));
    if (options.verifier == Verifier::kBound) {
      Theorem1Options o;
      o.groups = &groups;
      for (int s = 0; s < config.n; ++s) {
        const auto su = static_cast<std::size_t>(s);
        checks[su].p_hat = theorem1_bound(s, targets[su].x, config, mu, o).value;
      }
      return;
    }
    SystemConfig cfg = config;
    cfg.seed = detail::derive_seed(config.seed, c);
    SimulationOptions so;
    so.target_samples = options.samples_per_source;
    so.warmup_updates = options.warmup_updates;
    const SimulationResult sim = run_simulation(cfg, mu, so);
    for (std::size_t s = 0; s < checks.size(); ++s) {
      const ViolationEstimate e = estimate_violation(sim.samples[s], targets[s].x);
      checks[s] = {e.p_hat, e.ci_halfwidth, e.count};
    }
  });
  return out;
}

OptSearchResult select_feasible(std::vector<OptCandidate> candidates, const ViolationSpec& targets,
                                const OptSearchOptions& options) {
  OptSearchResult r;
  r.candidates = std::move(candidates);
  for (std::size_t c = 0; c < r.candidates.size(); ++c) {
    if (judge_candidate(r.candidates[c], targets, options.verifier, options.sigmas).feasible) {
      r.feasible.push_back(c);
    }
  }
  if (!r.feasible.empty()) {
    const std::size_t g = r.candidates.front().group_weights.size();
    for (std::size_t k = 0; k < g; ++k) {
      std::size_t best = r.feasible.front();
      for (std::size_t c : r.feasible) {
        if (r.candidates[c].group_weights[k] < r.candidates[best].group_weights[k]) best = c;
      }
      r.frontier.push_back(best);
    }
  }
  return r;
}

OptSearchResult optimal_search(const SystemConfig& config, const ViolationSpec& targets,
                               const GroupStructure& groups, const OptSearchOptions& options) {
  std::uint64_t used = 0;
  auto candidates = evaluate_group_grid(config, targets, groups, options, &used);
  OptSearchResult r = select_feasible(std::move(candidates), targets, options);
  r.samples_used = used;
  return r;
}

std::string design_report_json(const DesignOutcome& outcome, const ViolationSpec& targets) {
  nlohmann::json j;
  j["algorithm"] = outcome.algorithm;
  j["feasible"] = outcome.feasible;
  j["reason"] = outcome.reason;
  j["weights"] = outcome.weights ? nlohmann::json(std::vector<double>(
                                       outcome.weights->values().begin(),
                                       outcome.weights->values().end()))
                                 : nlohmann::json(nullptr);
  j["certified_bounds"] = outcome.certified_bounds;
  j["theta_star"] = outcome.theta_star;
  if (!outcome.minimal_weights.empty()) j["minimal_weights"] = outcome.minimal_weights;
  j["order"] = outcome.order;
  j["bound_evaluations"] = outcome.bound_evaluations;
  if (outcome.failing_source >= 0) {
    j["failing_source"] = outcome.failing_source;
    j["tightest_bound"] = outcome.tightest_bound;
  }
  auto& tr = j["trace"] = nlohmann::json::array();
  for (const TraceStep& s : outcome.trace) {
    tr.push_back({{"source", s.source},
                  {"weight", s.weight},
                  {"theta_star", s.theta_star},
                  {"bound", s.bound},
                  {"evaluations", s.evaluations}});
  }
  auto& tg = j["targets"] = nlohmann::json::array();
  for (const Target& t : targets.targets) tg.push_back({{"x", t.x}, {"eps", t.eps}});
  return j.dump(2);
}

}  // namespace paoi
