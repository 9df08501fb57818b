// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "paoi/simulator.hpp"
#include "test_util.hpp"

namespace paoi {
namespace {

using test::code_of;

SystemConfig deterministic_system(int n, double b, double v, std::uint64_t seed = 1) {
  SystemConfig c;
  c.n = n;
  c.b = b;
  c.service = ServiceModel::deterministic(v);
  c.seed = seed;
  return c;
}

SimulationResult simulate(const SystemConfig& c, std::uint64_t samples, bool records = true) {
  SimulationOptions o;
  o.target_samples = samples;
  o.keep_records = records;
  return run_simulation(c, WeightVector::uniform(c.n), o);
}

TEST(Simulator, SingleSourceIsConstant) {
  const auto r = simulate(deterministic_system(1, 10.0, 2.0), 500);
  ASSERT_EQ(r.samples[0].size(), 500u);
  for (double a : r.samples[0]) EXPECT_EQ(a, 12.0);
  EXPECT_LT(check_lemma1_residuals(r.records[0], 10.0), 1e-9);
}

TEST(Simulator, TwoSourcesTakeElevenOrTwelve) {
  const auto c = deterministic_system(2, 10.0, 1.0, 42);
  const auto r = simulate(c, 40000);
  for (int i = 0; i < 2; ++i) {
    std::size_t twelve = 0;
    for (double a : r.samples[i]) {
      ASSERT_TRUE(a == 11.0 || a == 12.0) << a;
      if (a == 12.0) ++twelve;
    }
    const double freq = static_cast<double>(twelve) / r.samples[i].size();
    // binomial standard error 0.0025
    EXPECT_NEAR(freq, 0.5, 0.0125);
    EXPECT_LT(check_lemma1_residuals(r.records[i], c.b), 1e-9);
  }
  const auto slack = regime_bound_check(r.records[0], Regime::kLong, c);
  EXPECT_GE(slack.min_slack, -1e-9);
  EXPECT_GT(slack.checked, 0u);
}

TEST(Simulator, LateSourceIsPreempted) {
  const auto c = deterministic_system(2, 10.0, 6.0, 3);
  const auto r = simulate(c, 2000);
  // t=0: one source is served on [0,6], the other on [6,12], past the next
  // arrival at 10. The first preempted update therefore carries I = 1.
  const auto& late = r.records[0][0].departure == 12.0 ? r.records[0] : r.records[1];
  ASSERT_EQ(late[0].departure, 12.0);
  bool saw_single = false;
  for (const PacketRecord& rec : late) {
    if (rec.k >= 1 && rec.preempted == 1) saw_single = true;
  }
  EXPECT_TRUE(saw_single);
  EXPECT_GT(r.stats[0].preempted + r.stats[1].preempted, 0u);
  EXPECT_EQ(code_of([&] { regime_bound_check(r.records[0], Regime::kLong, c); }),
            ErrorCode::kRegimeViolated);
}

TEST(Simulator, OverloadedPairKeepsIdentities) {
  const auto c = deterministic_system(2, 10.0, 6.0, 11);
  const auto r = simulate(c, 1000);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(check_lemma1_residuals(r.records[i], c.b), 1e-9);
    for (const PacketRecord& rec : r.records[i]) {
      EXPECT_EQ(rec.departure, rec.generated + rec.waiting + rec.service);
      EXPECT_GE(rec.waiting, 0.0);
      EXPECT_GE(rec.idle, 0.0);
      EXPECT_GE(rec.busy, 0.0);
    }
  }
}

TEST(Simulator, ShortRegimeSlack) {
  const auto c = deterministic_system(4, 10.0, 3.0, 5);
  const auto r = simulate(c, 5000);
  for (int i = 0; i < 4; ++i) {
    const auto s = regime_bound_check(r.records[i], Regime::kShort, c, 2);
    EXPECT_GE(s.min_slack, -1e-9);
  }
}

TEST(Simulator, ShortRegimeAssertionFailsWhenIdle) {
  const auto c = deterministic_system(2, 10.0, 1.0, 5);
  const auto r = simulate(c, 100);
  EXPECT_EQ(code_of([&] { regime_bound_check(r.records[0], Regime::kShort, c); }),
            ErrorCode::kRegimeViolated);
}

TEST(Simulator, RejectsZeroSamples) {
  SimulationOptions o;
  o.target_samples = 0;
  EXPECT_EQ(code_of([&] {
              run_simulation(deterministic_system(1, 10.0, 1.0), WeightVector::uniform(1), o);
            }),
            ErrorCode::kConfig);
}

TEST(Simulator, RejectsWeightLengthMismatch) {
  SimulationOptions o;
  EXPECT_EQ(code_of([&] {
              run_simulation(deterministic_system(3, 10.0, 1.0), WeightVector::uniform(2), o);
            }),
            ErrorCode::kConfig);
}

TEST(Simulator, WarmupDiscardsEarlyUpdates) {
  SimulationOptions o;
  o.target_samples = 5;
  o.warmup_updates = 3;
  o.keep_records = true;
  const auto r = run_simulation(deterministic_system(1, 10.0, 2.0), WeightVector::uniform(1), o);
  EXPECT_EQ(r.samples[0].size(), 5u);
  // updates 0..2 are discarded, samples come from k = 3..7
  EXPECT_EQ(r.records[0].back().k, 7);
}

TEST(EstimateViolation, Examples) {
  const std::vector<double> four{11, 12, 12, 11};
  EXPECT_EQ(estimate_violation(four, 12).p_hat, 0.5);
  const std::vector<double> two{11, 12};
  EXPECT_EQ(estimate_violation(two, 100).p_hat, 0.0);
  EXPECT_EQ(estimate_violation(two, 5).p_hat, 1.0);
}

TEST(EstimateViolation, HalfwidthAndCounts) {
  const std::vector<double> four{11, 12, 12, 11};
  const auto e = estimate_violation(four, 12);
  EXPECT_NEAR(e.ci_halfwidth, 1.96 * std::sqrt(0.25 / 4), 1e-15);
  EXPECT_EQ(e.violations, 2u);
  EXPECT_EQ(e.count, 4u);
}

TEST(EstimateViolation, EmptyInput) {
  EXPECT_EQ(code_of([] { estimate_violation({}, 1.0); }), ErrorCode::kEmptyInput);
}

TEST(Lemma1, CorruptedWaitingGivesUnitResidual) {
  const auto r = simulate(deterministic_system(1, 10.0, 2.0), 20);
  auto records = r.records[0];
  records[5].waiting += 1.0;
  EXPECT_NEAR(check_lemma1_residuals(records, 10.0), 1.0, 1e-12);
}

TEST(Lemma1, NeedsTwoRecords) {
  const auto r = simulate(deterministic_system(1, 10.0, 2.0), 20);
  std::span<const PacketRecord> one(r.records[0].data(), 1);
  EXPECT_EQ(code_of([&] { check_lemma1_residuals(one, 10.0); }),
            ErrorCode::kInsufficientRecords);
}

TEST(Simulator, ReproducibleForEqualSeed) {
  SystemConfig c;
  c.n = 3;
  c.b = 4.0;
  c.service = ServiceModel::exponential(1.0);
  c.seed = 99;
  const std::vector<double> w{0.2, 0.3, 0.5};
  SimulationOptions o;
  o.target_samples = 3000;
  const auto a = run_simulation(c, validate_weights(w), o);
  const auto b = run_simulation(c, validate_weights(w), o);
  EXPECT_EQ(a.samples, b.samples);
  c.seed = 100;
  const auto d = run_simulation(c, validate_weights(w), o);
  EXPECT_NE(a.samples, d.samples);
}

TEST(Simulator, EventLogFormat) {
  const auto r = simulate(deterministic_system(1, 10.0, 2.0), 3);
  std::ostringstream os;
  write_event_log(os, r.records[0]);
  std::istringstream is(os.str());
  std::string header, first, second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  EXPECT_EQ(header, "source,k,S,W,V,D,A,T,N,I,T_prime");
  // the first update has no predecessor and therefore no PAoI
  EXPECT_EQ(first, "0,0,0,0,2,2,,0,0,0,0");
  EXPECT_EQ(second, "0,1,10,0,2,12,12,2,8,0,0");
}

}  // namespace
}  // namespace paoi
