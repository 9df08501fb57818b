// SPDX-License-Identifier: Apache-2.0
#include "paoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "paoi/errors.hpp"

namespace paoi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct QueueSlot {
  bool occupied = false;
  double generated = 0.0;
  // transmitter busy time accumulated over [0, generated]
  double busy_at_arrival = 0.0;
};

struct SourceHistory {
  std::int64_t next_k = 0;
  std::int64_t pending_preempted = 0;
  double last_generated = 0.0;
  double last_waiting = 0.0;
  double last_start = 0.0;
  // busy time of all services started before update k-1 began
  double last_cum_busy = 0.0;
  double last_waiting_prev = 0.0;
};

struct InService {
  int source = -1;
  PacketRecord record;
};

class Simulation {
 public:
  Simulation(const SystemConfig& config, const WeightVector& weights,
             const SimulationOptions& options)
      : cfg_(config),
        mu_(weights),
        opt_(options),
        rng_(config.seed),
        n_(static_cast<std::size_t>(config.n)),
        queues_(n_),
        history_(n_) {
    result_.samples.resize(n_);
    result_.records.resize(n_);
    result_.stats.resize(n_);
    result_.full_choice_counts.assign(n_, 0);
    for (auto& s : result_.stats) {
      s.min_long_slack = std::numeric_limits<double>::infinity();
      s.min_short_slack = std::numeric_limits<double>::infinity();
    }
    for (auto& v : result_.samples) v.reserve(static_cast<std::size_t>(opt_.target_samples));
    max_periods_ = opt_.max_periods;
    if (max_periods_ == 0) {
      max_periods_ = 1000 * (opt_.target_samples + opt_.warmup_updates + 2) *
                     static_cast<std::uint64_t>(n_ + 1);
    }
  }

  SimulationResult run() {
    std::uint64_t epoch = 0;
    while (sources_done_ < n_) {
      double next_arrival = static_cast<double>(epoch) * cfg_.b;
      if (serving_.source >= 0 && serving_.record.departure < next_arrival) {
        depart(serving_.record.departure);
        schedule(now_);
        continue;
      }
      if (epoch >= max_periods_) {
        throw Error(ErrorCode::kBudgetExceeded, "simulation exceeded its period cap");
      }
      arrive(next_arrival, epoch);
      ++epoch;
      if (serving_.source >= 0 && serving_.record.departure == next_arrival) {
        depart(next_arrival);
      }
      schedule(next_arrival);
    }
    result_.periods = epoch;
    result_.end_time = now_;
    for (std::size_t i = 0; i < n_; ++i) {
      result_.stats[i].queued_at_end = queues_[i].occupied;
      result_.stats[i].in_service_at_end = serving_.source == static_cast<int>(i);
    }
    return std::move(result_);
  }

 private:
  void arrive(double t, std::uint64_t epoch) {
    now_ = t;
    bool unfinished = serving_.source >= 0 && serving_.record.departure > t;
    double remaining = unfinished ? serving_.record.departure - t : 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      QueueSlot& q = queues_[i];
      if (q.occupied) {
        unfinished = true;
        ++history_[i].pending_preempted;
        ++result_.stats[i].preempted;
      }
      q.occupied = true;
      q.generated = t;
      q.busy_at_arrival = cum_busy_ - remaining;
      ++result_.stats[i].generated;
    }
    if (epoch > 0 && unfinished) ++result_.long_regime_breaks;
  }

  void depart(double t) {
    now_ = t;
    const int i = serving_.source;
    serving_.source = -1;
    const auto idx = static_cast<std::size_t>(i);
    PacketRecord& rec = serving_.record;
    SourceStats& st = result_.stats[idx];
    ++st.received;
    if (opt_.keep_records && result_.records[idx].size() < opt_.max_records_per_source) {
      result_.records[idx].push_back(rec);
    }
    if (rec.k >= 1) {
      double r = rec.waiting - (history_[idx].last_waiting_prev + rec.busy + rec.idle -
                                static_cast<double>(rec.preempted + 1) * cfg_.b);
      st.max_lemma1_residual = std::max(st.max_lemma1_residual, std::abs(r));
      auto kept = static_cast<std::uint64_t>(rec.k);
      auto& bucket = result_.samples[idx];
      if (kept >= opt_.warmup_updates && bucket.size() < opt_.target_samples) {
        bucket.push_back(rec.paoi);
        st.min_long_slack =
            std::min(st.min_long_slack, cfg_.b + rec.busy_after_arrival + rec.service - rec.paoi);
        st.min_short_slack = std::min(st.min_short_slack, cfg_.b + rec.busy + rec.service - rec.paoi);
        if (bucket.size() == opt_.target_samples) ++sources_done_;
      }
    }
  }

  void schedule(double t) {
    if (serving_.source >= 0) return;
    double total = 0.0;
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (queues_[i].occupied) {
        total += mu_[i];
        ++occupied;
      }
    }
    if (occupied == 0) {
      if (t >= cfg_.b && !idle_flagged_) {
        ++result_.idle_gaps_after_first_period;
        idle_flagged_ = true;
      }
      return;
    }
    idle_flagged_ = false;
    double u = uniform01(rng_) * total;
    std::size_t chosen = n_;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!queues_[i].occupied) continue;
      chosen = i;
      if (u < mu_[i]) break;
      u -= mu_[i];
    }
    if (occupied == n_) {
      ++result_.full_decisions;
      ++result_.full_choice_counts[chosen];
    }
    start_service(chosen, t);
  }

  void start_service(std::size_t i, double t) {
    QueueSlot& q = queues_[i];
    SourceHistory& h = history_[i];
    PacketRecord rec;
    rec.source = static_cast<int>(i);
    rec.k = h.next_k;
    rec.generated = q.generated;
    rec.waiting = t - q.generated;
    rec.service = cfg_.service.sample(rng_);
    rec.departure = rec.generated + rec.waiting + rec.service;
    if (rec.k == 0) {
      rec.paoi = kNaN;
    } else {
      rec.paoi = rec.departure - h.last_generated;
      rec.preempted = h.pending_preempted;
      rec.busy = cum_busy_ - h.last_cum_busy;
      // a difference of two long running sums; cancellation can leave -1e-14
      rec.idle = std::max(0.0, (t - h.last_start) - rec.busy);
      rec.busy_after_arrival = cum_busy_ - q.busy_at_arrival;
    }
    h.last_waiting_prev = h.last_waiting;
    h.last_waiting = rec.waiting;
    h.last_generated = rec.generated;
    h.last_start = t;
    h.last_cum_busy = cum_busy_;
    h.pending_preempted = 0;
    ++h.next_k;
    cum_busy_ += rec.service;
    q.occupied = false;
    ++result_.stats[i].transmissions;
    serving_.source = static_cast<int>(i);
    serving_.record = rec;
  }

  const SystemConfig& cfg_;
  const WeightVector& mu_;
  SimulationOptions opt_;
  Rng rng_;
  std::size_t n_;
  std::vector<QueueSlot> queues_;
  std::vector<SourceHistory> history_;
  InService serving_;
  SimulationResult result_;
  double now_ = 0.0;
  double cum_busy_ = 0.0;
  bool idle_flagged_ = false;
  std::size_t sources_done_ = 0;
  std::uint64_t max_periods_ = 0;
};

}  // namespace

double SimulationResult::max_lemma1_residual() const {
  double m = 0.0;
  for (const auto& s : stats) m = std::max(m, s.max_lemma1_residual);
  return m;
}

SimulationResult run_simulation(const SystemConfig& config, const WeightVector& weights,
                                const SimulationOptions& options) {
  config.validate();
  if (options.target_samples == 0) {
    throw Error(ErrorCode::kConfig, "target_samples must be positive");
  }
  if (static_cast<int>(weights.size()) != config.n) {
    throw Error(ErrorCode::kConfig, "weight vector length differs from n");
  }
  return Simulation(config, weights, options).run();
}

ViolationEstimate estimate_violation(std::span<const double> samples, double x) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no PAoI samples");
  std::uint64_t hits = 0;
  for (double a : samples) {
    if (a >= x) ++hits;
  }
  const double m = static_cast<double>(samples.size());
  const double p = static_cast<double>(hits) / m;
  return {p, 1.96 * std::sqrt(p * (1.0 - p) / m), hits, samples.size()};
}

double check_lemma1_residuals(std::span<const PacketRecord> records, double b) {
  if (records.size() < 2) {
    throw Error(ErrorCode::kInsufficientRecords, "need at least two consecutive records");
  }
  double worst = 0.0;
  for (std::size_t j = 1; j < records.size(); ++j) {
    const PacketRecord& prev = records[j - 1];
    const PacketRecord& cur = records[j];
    double r = cur.waiting - (prev.waiting + cur.busy + cur.idle -
                              static_cast<double>(cur.preempted + 1) * b);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

RegimeCheck regime_bound_check(std::span<const PacketRecord> records, Regime regime,
                               const SystemConfig& config, std::int64_t skip_updates) {
  constexpr double kTol = 1e-9;
  auto fail = [](const PacketRecord& r, const char* what) {
    std::ostringstream os;
    os.precision(9);
    os << what << " at source " << r.source << ", update " << r.k << " (S=" << r.generated
       << ", D=" << r.departure << ")";
    throw Error(ErrorCode::kRegimeViolated, os.str());
  };
  for (const PacketRecord& r : records) {
    if (regime == Regime::kLong) {
      if (r.departure > r.generated + config.b + kTol || (r.k >= 1 && r.preempted > 0)) {
        fail(r, "long regime broken: batch unfinished before next arrival");
      }
    } else if (r.k >= std::max<std::int64_t>(1, skip_updates) && r.idle > kTol) {
      fail(r, "short regime broken: transmitter idled");
    }
  }
  RegimeCheck out{std::numeric_limits<double>::infinity(), 0};
  for (const PacketRecord& r : records) {
    if (r.k < 1) continue;
    const double bound = regime == Regime::kLong ? config.b + r.busy_after_arrival + r.service
                                                 : config.b + r.busy + r.service;
    out.min_slack = std::min(out.min_slack, bound - r.paoi);
    ++out.checked;
  }
  return out;
}

void write_event_log(std::ostream& os, std::span<const PacketRecord> records) {
  const auto old = os.precision(9);
  os << "source,k,S,W,V,D,A,T,N,I,T_prime\n";
  for (const PacketRecord& r : records) {
    os << r.source << ',' << r.k << ',' << r.generated << ',' << r.waiting << ',' << r.service
       << ',' << r.departure << ',';
    if (!std::isnan(r.paoi)) os << r.paoi;
    os << ',' << r.busy << ',' << r.idle << ',' << r.preempted << ',' << r.busy_after_arrival
       << '\n';
  }
  os.precision(old);
}

}  // namespace paoi
