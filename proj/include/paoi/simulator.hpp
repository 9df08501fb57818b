// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "paoi/model.hpp"

namespace paoi {

// One received update (i, k) and the busy/idle accounting that links it to
// update (i, k-1). For k = 0 the inter-update fields are zero and paoi is NaN.
struct PacketRecord {
  int source = 0;
  std::int64_t k = 0;
  double generated = 0.0;   // S_i(k)
  double waiting = 0.0;     // W_i(k)
  double service = 0.0;     // V_i(k)
  double departure = 0.0;   // D_i(k) = S + W + V
  double paoi = 0.0;        // A_i(k) = D_i(k) - S_i(k-1)
  std::int64_t preempted = 0;      // I_i(k-1)
  double busy = 0.0;               // T_i(k-1)
  double idle = 0.0;               // N_i(k-1)
  double busy_after_arrival = 0.0; // T'_i(k-1)
};

struct PaoiSample {
  int source;
  double value;
};

struct SimulationOptions {
  std::uint64_t target_samples = 10000;
  std::uint64_t warmup_updates = 10;
  bool keep_records = false;
  std::size_t max_records_per_source = 1u << 20;
  // 0 selects a generous automatic cap.
  std::uint64_t max_periods = 0;
};

struct SourceStats {
  std::uint64_t generated = 0;
  std::uint64_t received = 0;
  std::uint64_t preempted = 0;
  std::uint64_t transmissions = 0;
  bool queued_at_end = false;
  bool in_service_at_end = false;
  double max_lemma1_residual = 0.0;
  // min over kept samples of (b + T' + V - A) and (b + T + V - A)
  double min_long_slack = 0.0;
  double min_short_slack = 0.0;
};

struct SimulationResult {
  // samples[i] holds exactly target_samples PAoI values of source i
  std::vector<std::vector<double>> samples;
  std::vector<std::vector<PacketRecord>> records;
  std::vector<SourceStats> stats;
  std::uint64_t periods = 0;
  double end_time = 0.0;
  // arrival epochs (after the first) at which the previous batch was unfinished
  std::uint64_t long_regime_breaks = 0;
  // idle gaps of the transmitter starting after the first period
  std::uint64_t idle_gaps_after_first_period = 0;
  // scheduling decisions taken with every queue occupied, and their outcomes
  std::uint64_t full_decisions = 0;
  std::vector<std::uint64_t> full_choice_counts;

  double max_lemma1_residual() const;
};

SimulationResult run_simulation(const SystemConfig& config, const WeightVector& weights,
                                const SimulationOptions& options);

struct ViolationEstimate {
  double p_hat;
  double ci_halfwidth;
  std::uint64_t violations;
  std::uint64_t count;
};

// Fraction of samples with A >= x and its 95% normal-approximation halfwidth.
ViolationEstimate estimate_violation(std::span<const double> samples, double x);

// Max |W(k) - [W(k-1) + T + N - (I+1) b]| over consecutive records of one source.
double check_lemma1_residuals(std::span<const PacketRecord> records, double b);

enum class Regime { kLong, kShort };

struct RegimeCheck {
  double min_slack;
  std::size_t checked;
};

// Verifies the asserted traffic regime from the event log (throws
// kRegimeViolated naming the first offending record), then returns the
// minimum of (bound - A) for the matching per-update PAoI bound.
// Records with k < skip_updates are exempt from the short-regime idle check.
RegimeCheck regime_bound_check(std::span<const PacketRecord> records, Regime regime,
                               const SystemConfig& config, std::int64_t skip_updates = 0);

// Delimited event log: source,k,S,W,V,D,A,T,N,I,T_prime with 9 significant digits.
void write_event_log(std::ostream& os, std::span<const PacketRecord> records);

}  // namespace paoi
