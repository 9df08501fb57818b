// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paoi/designer.hpp"

namespace paoi {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentSpec {
  std::string kind = "simulate";
  SystemConfig system;

  // explicit per-source weights win over group weights; uniform otherwise
  std::vector<double> weights;
  std::optional<GroupStructure> groups;
  std::vector<double> group_weights;  // mu'_g, split equally inside group g

  std::vector<Target> targets;  // one per source after expansion

  std::vector<double> x_grid;
  std::vector<double> eps_grid;  // region sweep: eps_2 values
  double eps1 = 0.1;
  std::vector<int> n_sweep;
  double b_prime = 0.0;
  std::vector<double> x_prime;  // one per group

  std::uint64_t samples = 100000;
  std::uint64_t warmup = 10;
  // PAoI samples allowed per sweep point (n * samples must fit)
  std::uint64_t sample_budget = 10000000;
  int workers = 1;
  PmfMode pmf = PmfMode::kQuadrature;
  Aggregation aggregation = Aggregation::kUnion;
  DesignerConfig designer;
  OptSearchOptions opt;

  WeightVector resolved_weights() const;
  ViolationSpec violation_spec() const;
  // canonical JSON of every resolved parameter; reloading it reproduces the run
  std::string to_json() const;
};

ExperimentSpec parse_experiment(const std::string& json_text);
ExperimentSpec load_experiment(const std::string& path);

// Delimited output with a '#'-prefixed manifest block above the header.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> row);
  void set_meta(const std::string& key, const std::string& value);
  void warn(const std::string& message) { warnings_.push_back(message); }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t column(const std::string& name) const;

  void write(std::ostream& os) const;
  // writes path and path + ".manifest.json"
  void save(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::string> warnings_;
};

std::string format_cell(double v);

// Attaches kind, seed, version and the resolved spec to a table.
void stamp_manifest(Table& t, const ExperimentSpec& spec);

Table simulate_table(const ExperimentSpec& spec, SimulationResult* result_out = nullptr);
// p_hat per (source, x) for x in x_grid, or each source's own target x
Table violation_table(const ExperimentSpec& spec, const SimulationResult& result);
Table bound_table(const ExperimentSpec& spec);

enum class DesignKind { kRandomizedL, kRandomizedS };
DesignOutcome run_design(const ExperimentSpec& spec, DesignKind kind);
Table design_table(const ExperimentSpec& spec, const DesignOutcome& outcome);

OptSearchResult run_opt_search(const ExperimentSpec& spec);
Table opt_search_table(const ExperimentSpec& spec, const OptSearchResult& result);

struct RegionPoint {
  double eps2;
  std::optional<std::pair<double, double>> l;  // (mu'_1, mu'_2)
  std::optional<std::pair<double, double>> s;
  // feasible group-1 weight range of the baseline
  std::optional<std::pair<double, double>> opt_range;
  bool opt_below_floor = false;
};

struct RegionSweep {
  std::vector<RegionPoint> points;
  // smallest eps2 on the grid that each method certifies; nullopt if none
  std::optional<double> min_eps2_l() const;
  std::optional<double> min_eps2_s() const;
  std::optional<double> min_eps2_opt() const;
};

RegionSweep region_sweep(const ExperimentSpec& spec);
Table region_table(const ExperimentSpec& spec, const RegionSweep& sweep);

struct DecayRow {
  int n;
  int group;
  double x;
  ViolationEstimate estimate;
  bool reliable;  // at least 10 violation events
  double theorem1;
  double theorem2;
  bool theorem2_admissible;
  double corollary1_rate;
  double corollary2_rate;
};

std::vector<DecayRow> decay_sweep(const ExperimentSpec& spec);
Table decay_table(const ExperimentSpec& spec, const std::vector<DecayRow>& rows);

struct ValidationCheck {
  std::string name;
  bool passed;
  std::string detail;
};

// Invariant suite on small fixed instances seeded from spec.system.seed.
std::vector<ValidationCheck> run_validation(const ExperimentSpec& spec);
Table validation_table(const ExperimentSpec& spec, const std::vector<ValidationCheck>& checks);

}  // namespace paoi
