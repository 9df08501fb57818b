// SPDX-License-Identifier: Apache-2.0
#include "paoi/wallenius.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "paoi/errors.hpp"
#include "quadrature.hpp"

namespace paoi {

DrawOutcome::DrawOutcome(std::vector<std::uint8_t> y, const WeightVector& mu) : y_(std::move(y)) {
  if (y_.size() != mu.size()) {
    throw Error(ErrorCode::kValidation, "draw outcome length differs from the weight vector");
  }
  for (std::size_t j = 0; j < y_.size(); ++j) {
    if (y_[j] > 1) throw Error(ErrorCode::kValidation, "draw outcome entries must be 0 or 1");
    if (y_[j]) {
      ++ell_;
    } else {
      d_ += mu[j];
    }
  }
}

double pmf_quadrature(const DrawOutcome& y, const WeightVector& mu,
                      const QuadratureOptions& options) {
  if (y.drawn() == 0) return 1.0;
  if (y.drawn() == static_cast<int>(y.size())) return 1.0;
  const double d = y.residual_weight();
  std::vector<double> exponents;
  exponents.reserve(static_cast<std::size_t>(y.drawn()));
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y.y()[j]) exponents.push_back(mu[j] / d);
  }
  auto integrand = [&exponents](double t) {
    const double lt = std::log(t);
    double prod = 1.0;
    for (double e : exponents) prod *= -std::expm1(e * lt);
    return prod;
  };
  auto r = detail::integrate_adaptive(integrand, 0.0, 1.0, options.abs_tol, options.rel_tol,
                                      options.max_panels);
  return std::clamp(r.value, 0.0, 1.0);
}

double pmf_oracle(const DrawOutcome& y, const WeightVector& mu) {
  const int ell = y.drawn();
  if (ell > kOracleMaxDrawn) {
    throw Error(ErrorCode::kTooLarge, "oracle supports at most 20 drawn items");
  }
  if (ell == 0) return 1.0;
  std::vector<double> drawn;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y.y()[j]) drawn.push_back(mu[j]);
  }
  double drawn_total = 0.0;
  for (double w : drawn) drawn_total += w;
  const double outside = y.residual_weight();
  const std::size_t states = std::size_t{1} << ell;
  // prob[mask]: the first |mask| draws are exactly the items in mask
  std::vector<double> prob(states, 0.0);
  std::vector<double> taken(states, 0.0);
  prob[0] = 1.0;
  for (std::size_t mask = 1; mask < states; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    taken[mask] = taken[mask & (mask - 1)] + drawn[low];
  }
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (prob[mask] == 0.0) continue;
    const double remaining = outside + (drawn_total - taken[mask]);
    for (int j = 0; j < ell; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit) continue;
      prob[mask | bit] += prob[mask] * drawn[static_cast<std::size_t>(j)] / remaining;
    }
  }
  return std::clamp(prob[states - 1], 0.0, 1.0);
}

namespace {

struct DrawnWeights {
  std::vector<double> mu;
  double d;
};

DrawnWeights drawn_weights(const DrawOutcome& y, const WeightVector& mu) {
  if (y.drawn() < 1) {
    throw Error(ErrorCode::kDomain, "saddlepoint needs at least one drawn item");
  }
  if (!(y.residual_weight() > 0.0)) {
    throw Error(ErrorCode::kDomain, "saddlepoint needs positive residual weight");
  }
  DrawnWeights out{{}, y.residual_weight()};
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y.y()[j]) out.mu.push_back(mu[j]);
  }
  return out;
}

// (r d - 1) - sum_j r mu_j q_j / (1 - q_j) with q_j = 2^{-r mu_j}; half the
// t-derivative of log Phi at t = 1/2. Strictly increasing in r.
struct Stationarity {
  double value;
  double slope;
};

Stationarity stationarity(const DrawnWeights& w, double r) {
  constexpr double kLn2 = std::numbers::ln2;
  double value = r * w.d - 1.0;
  double slope = w.d;
  for (double m : w.mu) {
    const double a = r * m * kLn2;
    const double em1 = std::expm1(a);
    value -= (a / kLn2) / em1;
    // d/dr of (a / ln2) / (e^a - 1)
    slope -= m * (em1 - a * (em1 + 1.0)) / (em1 * em1);
  }
  return {value, slope};
}

double log_phi_derivative(const DrawnWeights& w, double r, double tau) {
  double v = (r * w.d - 1.0) / tau;
  for (double m : w.mu) {
    const double e = r * m;
    const double te = std::pow(tau, e);
    v -= e * std::pow(tau, e - 1.0) / (1.0 - te);
  }
  return v;
}

}  // namespace

FogParams fog_solve(const DrawOutcome& y, const WeightVector& mu) {
  const DrawnWeights w = drawn_weights(y, mu);
  double lo = 1e-8;
  double hi = 1e8;
  if (!(stationarity(w, lo).value < 0.0) || !(stationarity(w, hi).value > 0.0)) {
    throw Error(ErrorCode::kNoRoot, "saddlepoint condition has no sign change");
  }
  double r = (1.0 + static_cast<double>(w.mu.size()) / std::numbers::ln2) / w.d;
  r = std::clamp(r, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const Stationarity s = stationarity(w, r);
    if (s.value == 0.0) break;
    if (s.value < 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    double next = r - s.value / s.slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 1e-15 * r) {
      r = next;
      break;
    }
    r = next;
  }
  FogParams p;
  p.tau = 0.5;
  p.r = r;
  p.residual = log_phi_derivative(w, r, p.tau);
  return p;
}

FogTerms fog_terms(const DrawOutcome& y, const WeightVector& mu) {
  const DrawnWeights w = drawn_weights(y, mu);
  FogTerms out{fog_solve(y, mu), 0.0, 0.0};
  const double r = out.params.r;
  const double tau = out.params.tau;
  const double rd = r * w.d;
  const double lt = std::log(tau);
  double log_phi = std::log(rd) + (rd - 1.0) * lt;
  double psi = -(rd - 1.0) / (tau * tau);
  for (double m : w.mu) {
    const double e = r * m;
    const double te = std::exp(e * lt);
    const double one_minus = -std::expm1(e * lt);
    log_phi += std::log(one_minus);
    const double num = (e - 1.0) * std::pow(tau, e - 2.0) * one_minus + e * te * te / (tau * tau);
    psi -= e * num / (one_minus * one_minus);
  }
  out.log_phi = log_phi;
  out.psi = psi;
  return out;
}

double log_pmf_fog(const DrawOutcome& y, const WeightVector& mu) {
  const FogTerms t = fog_terms(y, mu);
  if (!(t.psi < 0.0)) {
    std::ostringstream os;
    os << "saddlepoint curvature is nonnegative (psi=" << t.psi << ")";
    throw Error(ErrorCode::kInvalidCurvature, os.str());
  }
  return t.log_phi + 0.5 * std::log(-2.0 * std::numbers::pi / t.psi);
}

double pmf_fog(const DrawOutcome& y, const WeightVector& mu) {
  return std::exp(log_pmf_fog(y, mu));
}

const char* pmf_mode_name(PmfMode mode) {
  switch (mode) {
    case PmfMode::kQuadrature: return "quadrature";
    case PmfMode::kFog: return "fog";
    case PmfMode::kOracle: return "oracle";
  }
  return "?";
}

PmfMode parse_pmf_mode(const std::string& name) {
  if (name == "quadrature") return PmfMode::kQuadrature;
  if (name == "fog") return PmfMode::kFog;
  if (name == "oracle") return PmfMode::kOracle;
  throw Error(ErrorCode::kConfig, "unknown pmf mode '" + name + "'");
}

double pmf(const DrawOutcome& y, const WeightVector& mu, PmfMode mode) {
  if (y.drawn() == 0 || y.drawn() == static_cast<int>(y.size())) return 1.0;
  switch (mode) {
    case PmfMode::kQuadrature: return pmf_quadrature(y, mu);
    case PmfMode::kFog: return pmf_fog(y, mu);
    case PmfMode::kOracle: return pmf_oracle(y, mu);
  }
  return 0.0;
}

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return std::round(c);
}

}  // namespace

void for_each_outcome(int source, int ell, const WeightVector& mu, const GroupStructure* groups,
                      const std::function<void(const WeightedOutcome&)>& visit) {
  const int n = static_cast<int>(mu.size());
  if (source < 0 || source >= n) throw Error(ErrorCode::kDomain, "source index out of range");
  if (ell < 0 || ell > n - 1) throw Error(ErrorCode::kDomain, "draw count must lie in [0, n-1]");

  if (groups == nullptr) {
    std::vector<int> others;
    for (int j = 0; j < n; ++j) {
      if (j != source) others.push_back(j);
    }
    const int m = static_cast<int>(others.size());
    std::vector<int> pick(static_cast<std::size_t>(ell));
    for (int k = 0; k < ell; ++k) pick[static_cast<std::size_t>(k)] = k;
    while (true) {
      std::vector<std::uint8_t> y(static_cast<std::size_t>(n), 0);
      for (int k : pick) y[static_cast<std::size_t>(others[static_cast<std::size_t>(k)])] = 1;
      visit({DrawOutcome(std::move(y), mu), 1.0});
      int k = ell - 1;
      while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - ell + k) --k;
      if (k < 0) break;
      ++pick[static_cast<std::size_t>(k)];
      for (int q = k + 1; q < ell; ++q) {
        pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
      }
    }
    return;
  }

  groups->check_equal_within(mu);
  const int home = groups->group_of(source);
  const std::size_t classes = groups->sizes.size();
  std::vector<int> available(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    available[c] = groups->sizes[c] - (static_cast<int>(c) == home ? 1 : 0);
  }
  std::vector<int> counts(classes, 0);
  std::function<void(std::size_t, int)> recurse = [&](std::size_t c, int left) {
    if (c + 1 == classes) {
      if (left > available[c]) return;
      counts[c] = left;
      std::vector<std::uint8_t> y(static_cast<std::size_t>(n), 0);
      double mult = 1.0;
      for (std::size_t g = 0; g < classes; ++g) {
        mult *= binomial(available[g], counts[g]);
        int s = groups->first_source(static_cast<int>(g));
        for (int placed = 0; placed < counts[g]; ++s) {
          if (s == source) continue;
          y[static_cast<std::size_t>(s)] = 1;
          ++placed;
        }
      }
      visit({DrawOutcome(std::move(y), mu), mult});
      return;
    }
    for (int k = 0; k <= std::min(left, available[c]); ++k) {
      counts[c] = k;
      recurse(c + 1, left - k);
    }
  };
  recurse(0, ell);
}

std::vector<WeightedOutcome> enumerate_outcomes(int source, int ell, const WeightVector& mu,
                                                const GroupStructure* groups) {
  std::vector<WeightedOutcome> out;
  for_each_outcome(source, ell, mu, groups, [&](const WeightedOutcome& w) { out.push_back(w); });
  return out;
}

}  // namespace paoi
