// SPDX-License-Identifier: Apache-2.0
// Frozen values come from tests/oracles/compute_oracles.py: event probabilities
// by enumerating every service order, theta optima by dense grids refined by
// golden section at 30 digits.
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "paoi/bounds.hpp"
#include "test_util.hpp"

namespace paoi {
namespace {

using test::code_of;

SystemConfig system(int n, double b, ServiceModel s) {
  SystemConfig c;
  c.n = n;
  c.b = b;
  c.service = s;
  return c;
}

WeightVector weights(std::vector<double> w) { return validate_weights(w); }

TEST(EventProbability, MatchesOrderEnumeration) {
  const auto mu = weights({0.2, 0.3, 0.5});
  const double expect[3][3] = {
      {0.2, 0.28571428571428573, 0.51428571428571426},
      {0.3, 0.375, 0.325},
      {0.5, 0.33928571428571428, 0.16071428571428572},
  };
  for (int i = 0; i < 3; ++i) {
    for (int ell = 0; ell < 3; ++ell) {
      EXPECT_NEAR(std::exp(event_log_probability(i, ell, mu, PmfMode::kQuadrature)),
                  expect[i][ell], 1e-10)
          << i << ',' << ell;
      EXPECT_NEAR(std::exp(event_log_probability(i, ell, mu, PmfMode::kOracle)), expect[i][ell],
                  1e-14);
    }
  }
}

TEST(EventProbability, GroupedLargeInstanceMatchesChain) {
  // two groups of 24 with weights (0.2, 0.8); reference values from a Markov
  // chain over per-group draw counts, which never touches the Wallenius integral
  const GroupStructure g{{24, 24}};
  const std::vector<double> gw{0.2, 0.8};
  const auto mu = g.expand(gw);
  const int ells[] = {0, 10, 31, 32, 36, 47};
  const double light[] = {-4.787491742782046,  -4.5545061098753696, -3.731578564723204,
                          -3.677280440903613,  -3.4641201961208042, -3.1792018788946773};
  const double heavy[] = {-3.4011973816621554, -3.4690382409089387, -4.0335312412333802,
                          -4.1119993080505499, -4.5692110338523129, -9.9483194935891246};
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(event_log_probability(0, ells[k], mu, PmfMode::kQuadrature, &g), light[k], 1e-7)
        << ells[k];
    EXPECT_NEAR(event_log_probability(24, ells[k], mu, PmfMode::kQuadrature, &g), heavy[k], 1e-7)
        << ells[k];
  }
}

TEST(FExponent, HandInstance) {
  const auto mu = WeightVector::uniform(2);
  const auto v1 = ServiceModel::deterministic(1.0);
  for (double theta : {0.01, 0.3, 2.0}) {
    EXPECT_NEAR(f_exponent(0, 0, theta, v1, mu, PmfMode::kQuadrature), 2 * theta + std::log(0.5),
                1e-12);
    EXPECT_NEAR(f_exponent(0, 1, theta, v1, mu, PmfMode::kQuadrature), 3 * theta + std::log(0.5),
                1e-12);
  }
}

TEST(FExponent, LastEllHasUnitFactor) {
  const auto mu = weights({0.1, 0.2, 0.3, 0.4});
  const auto s = ServiceModel::exponential(2.0);
  const double theta = 0.7;
  // only outcome: every other source drawn, pmf 0.2412698... for source 1
  const double g = 0.24126984126984127;
  EXPECT_NEAR(f_exponent(1, 3, theta, s, mu, PmfMode::kOracle), 5 * s.log_mgf(theta) + std::log(g),
              1e-13);
}

TEST(Theorem1, HandInstanceAsPrinted) {
  Theorem1Options o;
  o.aggregation = Aggregation::kAsPrinted;
  const auto r = theorem1_bound(0, 14.0, system(2, 10.0, ServiceModel::deterministic(1.0)),
                                WeightVector::uniform(2), o);
  EXPECT_NEAR(r.value, 0.25, 1e-6);
  EXPECT_EQ(r.theta_star, o.search.theta_lo);
  EXPECT_EQ(r.argmax_ell, 1);
}

TEST(Theorem1, HandInstanceUnionRunsToCap) {
  // union exponent is exactly theta here, so the sup sits at the search cap;
  // the true probability is zero because A <= 12
  const auto r = theorem1_bound(0, 14.0, system(2, 10.0, ServiceModel::deterministic(1.0)),
                                WeightVector::uniform(2), {});
  EXPECT_NEAR(r.log_value, -kUnboundedThetaScale, 1e-6);
}

TEST(Theorem1, ThreeSourceUnion) {
  const auto mu = weights({0.2, 0.3, 0.5});
  const auto c = system(3, 5.0, ServiceModel::exponential(1.0));
  const auto r = theorem1_bound(0, 12.0, c, mu, {});
  EXPECT_NEAR(r.value, 0.72043443774185618, 1e-7);
  EXPECT_NEAR(r.theta_star, 3.0 / 7.0, 1e-5);
  EXPECT_FALSE(r.vacuous);
}

TEST(Theorem1, ThreeSourceAsPrinted) {
  const auto mu = weights({0.2, 0.3, 0.5});
  const auto c = system(3, 5.0, ServiceModel::exponential(1.0));
  Theorem1Options o;
  o.aggregation = Aggregation::kAsPrinted;
  EXPECT_NEAR(theorem1_bound(0, 12.0, c, mu, o).value, 0.13602400373429485, 1e-7);
}

TEST(Theorem1, EqualWeightsSixSources) {
  const auto c = system(6, 30.0, ServiceModel::exponential_mean(1.5));
  const auto mu = WeightVector::uniform(6);
  EXPECT_EQ(theorem1_bound(0, 36.0, c, mu, {}).value, 1.0);
  EXPECT_TRUE(theorem1_bound(0, 36.0, c, mu, {}).vacuous);
  EXPECT_NEAR(theorem1_bound(0, 45.0, c, mu, {}).value, 0.60454728372245217, 1e-7);
  EXPECT_NEAR(theorem1_bound(0, 55.0, c, mu, {}).value, 0.027483685834382142, 1e-8);
}

TEST(Theorem1, NonincreasingInX) {
  const auto c = system(4, 10.0, ServiceModel::exponential(1.0));
  const auto mu = weights({0.1, 0.2, 0.3, 0.4});
  double prev = 2.0;
  for (double x = 11.0; x <= 40.0; x += 1.5) {
    const double v = theorem1_bound(2, x, c, mu, {}).raw_value;
    EXPECT_LE(v, prev * (1 + 1e-9));
    prev = v;
  }
}

TEST(Theorem1, Lemma4NeverLooserThanExhaustive) {
  const auto c = system(5, 15.0, ServiceModel::exponential_mean(1.5));
  const auto mu = weights({0.05, 0.1, 0.15, 0.3, 0.4});
  for (int i = 0; i < 5; ++i) {
    Theorem1Options ex, l4;
    ex.pmf = l4.pmf = PmfMode::kOracle;
    l4.ell_strategy = EllStrategy::kLemma4;
    const auto a = theorem1_bound(i, 30.0, c, mu, ex);
    const auto b = theorem1_bound(i, 30.0, c, mu, l4);
    // keeping only ell = n - 1 lowers the exponent maximum, so the bound shrinks
    EXPECT_LE(b.log_value, a.log_value + 1e-9) << i;
    if (a.argmax_ell == 4) EXPECT_NEAR(a.log_value, b.log_value, 1e-7);
  }
}

TEST(Theorem1, RequiresXAboveB) {
  const auto c = system(2, 10.0, ServiceModel::deterministic(1.0));
  EXPECT_EQ(code_of([&] { theorem1_bound(0, 10.0, c, WeightVector::uniform(2), {}); }),
            ErrorCode::kDomain);
}

TEST(Theorem1, GridDoublingIsStable) {
  const auto c = system(6, 30.0, ServiceModel::exponential_mean(1.5));
  const auto mu = WeightVector::uniform(6);
  Theorem1Options a, b;
  a.search.mode = b.search.mode = ThetaSearch::Mode::kGrid;
  b.search.grid_points = 800;
  const double va = theorem1_bound(0, 50.0, c, mu, a).value;
  const double vb = theorem1_bound(0, 50.0, c, mu, b).value;
  EXPECT_LT(std::abs(va - vb) / vb, 0.005);
}

struct Theorem2Case {
  double mu;
  double bound;
};

TEST(Theorem2, ExponentialClosedForm) {
  const auto s = ServiceModel::exponential(1.0);
  for (const Theorem2Case& c : {Theorem2Case{0.48, 0.10737970490959486},
                                Theorem2Case{0.49, 0.099185366084441504},
                                Theorem2Case{0.5, 0.091578194443670901},
                                Theorem2Case{0.6, 0.040427681994512803}}) {
    const auto r = theorem2_bound(c.mu, 11.0, 1.0, s);
    EXPECT_NEAR(r.value, c.bound, 1e-9) << c.mu;
    EXPECT_NEAR(r.value, 10 * c.mu * std::exp(1 - 10 * c.mu), 1e-9);
    EXPECT_NEAR(r.theta_star, c.mu - 0.1, 1e-5);
    EXPECT_TRUE(r.admissible);
  }
}

TEST(Theorem2, FullWeight) {
  const auto r = theorem2_bound(1.0, 11.0, 1.0, ServiceModel::exponential(1.0));
  EXPECT_NEAR(r.value, 10 * std::exp(-9.0), 1e-9);
  EXPECT_NEAR(r.theta_star, 0.9, 1e-5);
}

TEST(Theorem2, DeterministicService) {
  const auto r = theorem2_bound(0.5, 11.0, 1.0, ServiceModel::deterministic(1.0));
  EXPECT_NEAR(r.value, 0.025206785075324191, 1e-9);
  EXPECT_NEAR(r.theta_star, 0.587786664902, 1e-5);
}

TEST(Theorem2, TinyGapApproachesOne) {
  const auto r = theorem2_bound(0.5, 10.0 + 1e-9, 10.0, ServiceModel::exponential(1.0));
  EXPECT_NEAR(r.value, 1.0, 1e-5);
  EXPECT_EQ(code_of([] { theorem2_bound(0.5, 10.0, 10.0, ServiceModel::exponential(1.0)); }),
            ErrorCode::kDomain);
}

TEST(Theorem2, SourceOverloadUsesWeight) {
  const auto c = system(2, 1.0, ServiceModel::exponential(1.0));
  const auto mu = weights({0.5, 0.5});
  EXPECT_NEAR(theorem2_bound(1, 11.0, c, mu).value, 0.091578194443670901, 1e-9);
}

TEST(Theorem2, NonincreasingInWeight) {
  const auto s = ServiceModel::exponential_mean(3.0);
  double prev = 2.0;
  for (int k = 1; k <= 9; ++k) {
    const double v = theorem2_bound(0.1 * k, 60.0, 10.0, s).value;
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}

TEST(AdmissibleTheta, ClosedForms) {
  EXPECT_NEAR(admissible_theta_sup(ServiceModel::exponential(1.0), 0.5), 0.5, 1e-12);
  EXPECT_NEAR(admissible_theta_sup(ServiceModel::deterministic(2.0), 0.75), std::log(4.0) / 2.0,
              1e-12);
  EXPECT_EQ(admissible_theta_sup(ServiceModel::exponential(3.0), 1.0), 3.0);
}

TEST(Corollary2, Examples) {
  EXPECT_NEAR(corollary2_rate(8.0, 5.0, 0.5, ServiceModel::exponential(1.0)), 1.5, 1e-12);
  EXPECT_EQ(corollary2_rate(5.0, 5.0, 0.5, ServiceModel::exponential(1.0)), 0.0);
  EXPECT_NEAR(corollary2_rate(8.0, 5.0, 0.3, ServiceModel::deterministic(2.0)),
              std::log(1.0 / 0.7) / 2.0 * 3.0, 1e-12);
}

TEST(Corollary1, IncreasingInXPrime) {
  const auto mu = WeightVector::uniform(6);
  const auto s = ServiceModel::exponential_mean(1.5);
  double prev = -std::numeric_limits<double>::infinity();
  for (double xp : {6.0, 7.0, 8.0, 10.0}) {
    const double r = corollary1_rate(0, xp, 5.0, mu, s).rate;
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(Corollary1, FiniteProxyConverges) {
  // equal weights: the proxy is sup theta (x'-b') - (n+1)/n Lambda(theta)
  const auto s = ServiceModel::exponential(1.0);
  const double r8 = corollary1_rate(0, 8.0, 5.0, WeightVector::uniform(8), s).rate;
  const double r12 = corollary1_rate(0, 8.0, 5.0, WeightVector::uniform(12), s).rate;
  EXPECT_NEAR(r8, 1.875 + 1.125 * std::log(0.375), 1e-6);
  EXPECT_NEAR(r12, 3.0 * 23.0 / 36.0 + 13.0 / 12.0 * std::log(13.0 / 36.0), 1e-6);
  EXPECT_LT(std::abs(r8 - r12) / r12, 0.10);
}

TEST(ThetaSearch, DomainResolution) {
  ThetaSearch s;
  const auto [lo, hi] = s.domain(ServiceModel::exponential(2.0));
  EXPECT_EQ(lo, 1e-6);
  EXPECT_NEAR(hi, 2.0 * (1 - 1e-6), 1e-15);
  EXPECT_NEAR(s.domain(ServiceModel::deterministic(2.0)).second, kUnboundedThetaScale / 2.0, 1e-12);
  s.theta_lo = 5.0;
  EXPECT_EQ(code_of([&] { s.domain(ServiceModel::exponential(2.0)); }), ErrorCode::kDomain);
}

TEST(ThetaSearch, MaximizesConcaveFunction) {
  ThetaSearch s;
  const auto opt = maximize_over_theta([](double t) { return -(t - 0.3) * (t - 0.3); }, 0.0, 1.0, s);
  EXPECT_NEAR(opt.theta, 0.3, 1e-7);
}

TEST(Aggregation, Names) {
  EXPECT_EQ(parse_aggregation("as-printed"), Aggregation::kAsPrinted);
  EXPECT_STREQ(aggregation_name(Aggregation::kUnion), "union");
  EXPECT_EQ(code_of([] { parse_aggregation("max"); }), ErrorCode::kConfig);
}

}  // namespace
}  // namespace paoi
