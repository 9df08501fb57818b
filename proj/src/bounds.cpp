// SPDX-License-Identifier: Apache-2.0
#include "paoi/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "paoi/errors.hpp"

namespace paoi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_neg_inf(double v) { return std::isnan(v) ? -kInf : v; }

void require_source(int source, std::size_t n) {
  if (source < 0 || static_cast<std::size_t>(source) >= n) {
    throw Error(ErrorCode::kDomain, "source index out of range");
  }
}

void fill_result(BoundResult& r, double log_value) {
  r.log_value = log_value;
  r.raw_value = std::exp(log_value);
  r.vacuous = r.raw_value > 1.0;
  r.value = std::min(r.raw_value, 1.0);
}

}  // namespace

std::pair<double, double> ThetaSearch::domain(const ServiceModel& service) const {
  const double tmax = service.theta_max();
  double hi;
  if (theta_hi) {
    hi = *theta_hi;
  } else if (std::isfinite(tmax)) {
    hi = tmax * (1.0 - 1e-6);
  } else {
    hi = kUnboundedThetaScale / service.mean();
  }
  if (std::isfinite(tmax)) hi = std::min(hi, tmax * (1.0 - 1e-6));
  if (!(theta_lo > 0.0) || !(theta_lo < hi)) {
    throw Error(ErrorCode::kDomain, "theta search domain is empty");
  }
  return {theta_lo, hi};
}

ThetaOptimum maximize_over_theta(const std::function<double(double)>& objective, double lo,
                                 double hi, const ThetaSearch& search) {
  const int points = std::max(search.grid_points, 2);
  auto eval = [&](double t) { return finite_or_neg_inf(objective(t)); };
  const double step = (hi - lo) / (points - 1);
  ThetaOptimum best{lo, eval(lo)};
  int best_k = 0;
  for (int k = 1; k < points; ++k) {
    const double t = k + 1 == points ? hi : lo + step * k;
    const double v = eval(t);
    if (v > best.value) {
      best = {t, v};
      best_k = k;
    }
  }
  if (search.mode == ThetaSearch::Mode::kGrid) return best;

  double a = lo + step * std::max(best_k - 1, 0);
  double b = best_k + 1 >= points ? hi : lo + step * (best_k + 1);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > search.tolerance * std::max(1.0, std::abs(best.theta))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
  }
  const double t = 0.5 * (a + b);
  const double v = eval(t);
  if (v > best.value) best = {t, v};
  return best;
}

const char* aggregation_name(Aggregation a) {
  return a == Aggregation::kUnion ? "union" : "as-printed";
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "union") return Aggregation::kUnion;
  if (name == "as-printed" || name == "printed") return Aggregation::kAsPrinted;
  throw Error(ErrorCode::kConfig, "unknown aggregation '" + name + "'");
}

double event_log_probability(int source, int ell, const WeightVector& mu, PmfMode mode,
                             const GroupStructure* groups) {
  require_source(source, mu.size());
  const double mu_i = mu[static_cast<std::size_t>(source)];
  const int n = static_cast<int>(mu.size());
  if (ell == n - 1 && mode == PmfMode::kFog && n > 1) {
    // single outcome; the transfer factor mu_i / d is exactly one
    std::vector<std::uint8_t> y(mu.size(), 1);
    y[static_cast<std::size_t>(source)] = 0;
    return log_pmf_fog(DrawOutcome(std::move(y), mu), mu);
  }
  double total = 0.0;
  for_each_outcome(source, ell, mu, groups, [&](const WeightedOutcome& w) {
    const double g = pmf(w.outcome, mu, mode);
    total += w.multiplicity * g * mu_i / w.outcome.residual_weight();
  });
  return total > 0.0 ? std::log(total) : -kInf;
}

double f_exponent(int source, int ell, double theta, const ServiceModel& service,
                  const WeightVector& mu, PmfMode mode, const GroupStructure* groups) {
  const double lam = service.log_mgf(theta);
  return (ell + 2) * lam + event_log_probability(source, ell, mu, mode, groups);
}

BoundResult theorem1_bound(int source, double x, const SystemConfig& config,
                           const WeightVector& mu, const Theorem1Options& options) {
  config.validate();
  require_source(source, mu.size());
  if (static_cast<int>(mu.size()) != config.n) {
    throw Error(ErrorCode::kDomain, "weight vector length differs from n");
  }
  if (!(x > config.b)) throw Error(ErrorCode::kDomain, "threshold must exceed the sampling period");
  const int n = config.n;
  const ServiceModel& service = config.service;

  std::vector<int> ells;
  if (options.ell_strategy == EllStrategy::kLemma4) {
    ells.push_back(n - 1);
  } else {
    for (int ell = 0; ell < n; ++ell) ells.push_back(ell);
  }
  std::vector<double> log_p;
  log_p.reserve(ells.size());
  for (int ell : ells) {
    log_p.push_back(event_log_probability(source, ell, mu, options.pmf, options.groups));
  }

  auto max_f = [&](double theta, int* arg) {
    const double lam = service.log_mgf(theta);
    double best = -kInf;
    for (std::size_t k = 0; k < ells.size(); ++k) {
      const double f = (ells[k] + 2) * lam + log_p[k];
      if (f > best) {
        best = f;
        if (arg) *arg = ells[k];
      }
    }
    return best;
  };
  const double gap = x - config.b;
  const double log_n = std::log(static_cast<double>(n));
  auto exponent = [&](double theta) {
    const double m = max_f(theta, nullptr);
    return options.aggregation == Aggregation::kAsPrinted ? theta * gap - n * m
                                                          : theta * gap - log_n - m;
  };

  const auto [lo, hi] = options.search.domain(service);
  const ThetaOptimum opt = maximize_over_theta(exponent, lo, hi, options.search);

  BoundResult r;
  fill_result(r, -opt.value);
  r.theta_star = opt.theta;
  max_f(opt.theta, &r.argmax_ell);
  r.diagnostics["theta_lo"] = lo;
  r.diagnostics["theta_hi"] = hi;
  r.diagnostics["exponent"] = opt.value;
  r.diagnostics["max_f"] = max_f(opt.theta, nullptr);
  // theta_star maximizes the exponent (minimizes the bound)
  r.diagnostics["theta_star_maximizes_exponent"] = 1.0;
  r.diagnostics["at_lower_edge"] = opt.theta == lo ? 1.0 : 0.0;
  if (options.pmf == PmfMode::kFog && n > 1) {
    std::vector<std::uint8_t> y(mu.size(), 1);
    y[static_cast<std::size_t>(source)] = 0;
    r.diagnostics["fog_residual"] = fog_solve(DrawOutcome(std::move(y), mu), mu).residual;
  }
  return r;
}

double admissible_theta_sup(const ServiceModel& service, double mu_i) {
  if (!(mu_i > 0.0) || mu_i > 1.0) {
    throw Error(ErrorCode::kDomain, "weight must lie in (0, 1]");
  }
  if (mu_i >= 1.0) return service.theta_max();
  const double level = -std::log1p(-mu_i);
  if (const auto* e = std::get_if<Exponential>(&service.variant())) {
    return e->rate * mu_i;
  }
  if (const auto* d = std::get_if<Deterministic>(&service.variant())) {
    return level / d->value;
  }
  double lo = 0.0;
  double hi = service.theta_max();
  if (!std::isfinite(hi)) {
    hi = 1.0;
    while (service.log_mgf(hi) < level) hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (service.log_mgf(mid) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

BoundResult theorem2_bound(double mu_i, double x, double b, const ServiceModel& service,
                           const ThetaSearch& search) {
  if (!(x > b)) throw Error(ErrorCode::kDomain, "threshold must exceed the sampling period");
  const double sup = admissible_theta_sup(service, mu_i);
  auto [lo, hi] = search.domain(service);
  BoundResult r;
  r.diagnostics["theta_admissible_sup"] = sup;
  if (std::isfinite(sup)) hi = std::min(hi, sup * (1.0 - 1e-9));
  if (!(hi > lo)) {
    r.admissible = false;
    fill_result(r, 0.0);
    return r;
  }
  const double gap = x - b;
  // returns -log of the bound
  auto objective = [&](double theta) {
    const double lam = service.log_mgf(theta);
    const double denom = 1.0 - std::exp(lam) * (1.0 - mu_i);
    if (!(denom > 0.0)) return -kInf;
    return theta * gap - lam - std::log(mu_i) + std::log(denom);
  };
  const ThetaOptimum opt = maximize_over_theta(objective, lo, hi, search);
  fill_result(r, -opt.value);
  r.theta_star = opt.theta;
  r.admissible = mu_i >= 1.0 || service.log_mgf(opt.theta) < -std::log1p(-mu_i);
  r.diagnostics["theta_lo"] = lo;
  r.diagnostics["theta_hi"] = hi;
  return r;
}

BoundResult theorem2_bound(int source, double x, const SystemConfig& config,
                           const WeightVector& mu, const ThetaSearch& search) {
  require_source(source, mu.size());
  return theorem2_bound(mu[static_cast<std::size_t>(source)], x, config.b, config.service, search);
}

RateResult corollary1_rate(int source, double x_prime, double b_prime, const WeightVector& mu,
                           const ServiceModel& service, const ThetaSearch& search, PmfMode mode,
                           const GroupStructure* groups) {
  if (!(x_prime > b_prime)) throw Error(ErrorCode::kDomain, "x' must exceed b'");
  const int n = static_cast<int>(mu.size());
  const double log_p = event_log_probability(source, n - 1, mu, mode, groups);
  const double log_n = std::log(static_cast<double>(n));
  auto objective = [&](double theta) {
    return theta * (x_prime - b_prime) -
           (log_n + (n + 1) * service.log_mgf(theta) + log_p) / n;
  };
  const auto [lo, hi] = search.domain(service);
  const ThetaOptimum opt = maximize_over_theta(objective, lo, hi, search);
  return {opt.value, opt.theta};
}

double corollary2_rate(double x_prime, double b_prime, double mu_i, const ServiceModel& service) {
  if (x_prime < b_prime) throw Error(ErrorCode::kDomain, "x' must not be below b'");
  const double sup = admissible_theta_sup(service, mu_i);
  if (!(sup > 0.0)) throw Error(ErrorCode::kDomain, "admissible theta set is empty");
  if (x_prime == b_prime) return 0.0;
  return sup * (x_prime - b_prime);
}

}  // namespace paoi
