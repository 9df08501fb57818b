// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "paoi/model.hpp"

namespace paoi {

// Outcome of ell weighted draws without replacement from n unit-mass items:
// y[j] = 1 iff item j was drawn. residual_weight is the total weight of the
// items left in the urn.
class DrawOutcome {
 public:
  DrawOutcome(std::vector<std::uint8_t> y, const WeightVector& mu);

  const std::vector<std::uint8_t>& y() const { return y_; }
  int drawn() const { return ell_; }
  double residual_weight() const { return d_; }
  std::size_t size() const { return y_.size(); }

 private:
  std::vector<std::uint8_t> y_;
  int ell_ = 0;
  double d_ = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_panels = 4000;
};

// Integral form: int_0^1 prod_{j drawn} (1 - t^{mu_j / d}) dt.
double pmf_quadrature(const DrawOutcome& y, const WeightVector& mu,
                      const QuadratureOptions& options = {});

// Exact probability by dynamic programming over subsets of the drawn set,
// summing every draw order. Throws kTooLarge when more than 20 items are drawn.
double pmf_oracle(const DrawOutcome& y, const WeightVector& mu);

inline constexpr int kOracleMaxDrawn = 20;

struct FogParams {
  double tau = 0.5;
  double r = 1.0;
  // d/dt log Phi at t = tau
  double residual = 0.0;
};

// Places the peak of the transformed integrand Phi(t) = r d t^{rd-1}
// prod (1 - t^{r mu_j}) at tau = 1/2 by solving for r.
FogParams fog_solve(const DrawOutcome& y, const WeightVector& mu);

// Second-order (Laplace) approximation Phi(tau) * sqrt(-2 pi / psi(tau)).
double pmf_fog(const DrawOutcome& y, const WeightVector& mu);
double log_pmf_fog(const DrawOutcome& y, const WeightVector& mu);

struct FogTerms {
  FogParams params;
  double log_phi;
  double psi;
};
FogTerms fog_terms(const DrawOutcome& y, const WeightVector& mu);

enum class PmfMode { kQuadrature, kFog, kOracle };

const char* pmf_mode_name(PmfMode mode);
PmfMode parse_pmf_mode(const std::string& name);

// Dispatches on mode; ell = 0 is 1 and ell = n is 1 in every mode.
double pmf(const DrawOutcome& y, const WeightVector& mu, PmfMode mode);

struct WeightedOutcome {
  DrawOutcome outcome;
  // number of outcomes with the same class-count profile (1 without groups)
  double multiplicity;
};

// Visits every y with y[source] = 0 and ell ones. With a group structure the
// visitor sees one representative per class-count profile together with its
// multiplicity, so weighted sums over the visits equal full-enumeration sums.
void for_each_outcome(int source, int ell, const WeightVector& mu, const GroupStructure* groups,
                      const std::function<void(const WeightedOutcome&)>& visit);

std::vector<WeightedOutcome> enumerate_outcomes(int source, int ell, const WeightVector& mu,
                                                const GroupStructure* groups = nullptr);

}  // namespace paoi
