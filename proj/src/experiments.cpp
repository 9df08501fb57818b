// SPDX-License-Identifier: Apache-2.0
#include "paoi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "paoi/errors.hpp"
#include "parallel.hpp"

namespace paoi {

using nlohmann::json;

namespace {

constexpr std::uint64_t kReliableEvents = 10;

ServiceModel parse_service(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "exponential") {
    if (j.contains("rate")) return ServiceModel::exponential(j.at("rate").get<double>());
    if (j.contains("mean")) return ServiceModel::exponential_mean(j.at("mean").get<double>());
    throw Error(ErrorCode::kConfig, "exponential service needs 'rate' or 'mean'");
  }
  if (kind == "deterministic") return ServiceModel::deterministic(j.at("value").get<double>());
  throw Error(ErrorCode::kConfig, "unknown service kind '" + kind + "'");
}

json service_json(const ServiceModel& s) {
  if (std::holds_alternative<Exponential>(s.variant())) {
    return {{"kind", "exponential"}, {"rate", s.parameter()}};
  }
  return {{"kind", "deterministic"}, {"value", s.parameter()}};
}

GroupStructure equal_groups(int n, int count) {
  if (count < 1 || n % count != 0) {
    throw Error(ErrorCode::kConfig, "n=" + std::to_string(n) + " does not split into " +
                                        std::to_string(count) + " equal groups");
  }
  return GroupStructure{std::vector<int>(static_cast<std::size_t>(count), n / count)};
}

// contiguous runs of equal weights, so grouped enumeration applies to any
// weight vector
GroupStructure infer_groups(const WeightVector& mu) {
  GroupStructure g;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i > 0 && std::abs(mu[i] - mu[i - 1]) <= 1e-12 * std::max(mu[i], mu[i - 1])) {
      ++g.sizes.back();
    } else {
      g.sizes.push_back(1);
    }
  }
  return g;
}

std::vector<double> group_totals(const GroupStructure& g, const WeightVector& w) {
  std::vector<double> out;
  std::size_t s = 0;
  for (int size : g.sizes) {
    double t = 0.0;
    for (int k = 0; k < size; ++k) t += w[s++];
    out.push_back(t);
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

void require_budget(const ExperimentSpec& spec, int n) {
  const auto need = static_cast<std::uint64_t>(n) * spec.samples;
  if (spec.sample_budget > 0 && need > spec.sample_budget) {
    throw Error(ErrorCode::kBudgetExceeded,
                std::to_string(need) + " samples per point exceed the budget of " +
                    std::to_string(spec.sample_budget));
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "kind",     "preset",        "n",       "b",       "service", "seed",   "weights",
      "groups",   "targets",       "x_grid",  "eps_grid", "eps1",   "n_sweep", "b_prime",
      "x_prime",  "samples",       "warmup",  "sample_budget", "workers", "pmf",
      "aggregation", "designer",   "opt"};
  return keys;
}

}  // namespace

WeightVector ExperimentSpec::resolved_weights() const {
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != system.n) {
      throw Error(ErrorCode::kConfig, "weights must have one entry per source");
    }
    return WeightVector::validate(weights);
  }
  if (groups && !group_weights.empty()) return groups->expand(group_weights);
  return WeightVector::uniform(system.n);
}

ViolationSpec ExperimentSpec::violation_spec() const {
  ViolationSpec v{targets};
  if (static_cast<int>(v.size()) != system.n) {
    throw Error(ErrorCode::kConfig, "targets must cover every source");
  }
  v.validate(system.n, system.b);
  return v;
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["kind"] = kind;
  j["n"] = system.n;
  j["b"] = system.b;
  j["service"] = service_json(system.service);
  j["seed"] = system.seed;
  if (!weights.empty()) j["weights"] = weights;
  if (groups) {
    j["groups"]["sizes"] = groups->sizes;
    if (!group_weights.empty()) j["groups"]["weights"] = group_weights;
  }
  auto& t = j["targets"] = json::array();
  for (const Target& x : targets) t.push_back({{"x", x.x}, {"eps", x.eps}});
  j["x_grid"] = x_grid;
  j["eps_grid"] = eps_grid;
  j["eps1"] = eps1;
  j["n_sweep"] = n_sweep;
  j["b_prime"] = b_prime;
  j["x_prime"] = x_prime;
  j["samples"] = samples;
  j["warmup"] = warmup;
  j["sample_budget"] = sample_budget;
  j["workers"] = workers;
  j["pmf"] = pmf_mode_name(pmf);
  j["aggregation"] = aggregation_name(aggregation);
  j["designer"] = {{"delta", designer.delta},
                   {"pmf", pmf_mode_name(designer.pmf)},
                   {"aggregation", aggregation_name(designer.aggregation)},
                   {"fixed_point", designer.fixed_point},
                   {"max_fixed_point_iterations", designer.max_fixed_point_iterations}};
  j["opt"] = {{"grid_step", opt.grid_step},
              {"verifier", opt.verifier == Verifier::kSimulate ? "simulate" : "bound"},
              {"sigmas", opt.sigmas},
              {"search_budget", opt.sample_budget}};
  return j.dump();
}

ExperimentSpec parse_experiment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed experiment JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "experiment JSON must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw Error(ErrorCode::kConfig, "unknown key '" + key + "'");
  }

  ExperimentSpec s;
  try {
    if (j.contains("preset")) {
      const std::string p = j.at("preset").get<std::string>();
      double mean;
      if (p == "scenario1") {
        mean = 1.5;
      } else if (p == "scenario2") {
        mean = 8.0;
      } else if (p == "scenario3") {
        mean = 3.0;
      } else {
        throw Error(ErrorCode::kConfig, "unknown preset '" + p + "'");
      }
      s.system.n = 18;
      s.system.b = 90.0;
      s.system.service = ServiceModel::exponential_mean(mean);
      s.groups = GroupStructure{{9, 9}};
    }
    s.kind = j.value("kind", s.kind);
    s.system.n = j.value("n", s.system.n);
    s.system.b = j.value("b", s.system.b);
    if (j.contains("service")) s.system.service = parse_service(j.at("service"));
    s.system.seed = j.value("seed", s.system.seed);
    s.weights = j.value("weights", s.weights);
    if (j.contains("groups")) {
      const json& g = j.at("groups");
      if (g.contains("sizes")) {
        s.groups = GroupStructure{g.at("sizes").get<std::vector<int>>()};
      } else if (g.contains("count")) {
        s.groups = equal_groups(s.system.n, g.at("count").get<int>());
      }
      s.group_weights = g.value("weights", s.group_weights);
    }
    s.x_grid = j.value("x_grid", s.x_grid);
    s.eps_grid = j.value("eps_grid", s.eps_grid);
    s.eps1 = j.value("eps1", s.eps1);
    s.n_sweep = j.value("n_sweep", s.n_sweep);
    s.b_prime = j.value("b_prime", s.b_prime);
    s.x_prime = j.value("x_prime", s.x_prime);
    s.samples = j.value("samples", s.samples);
    s.warmup = j.value("warmup", s.warmup);
    s.sample_budget = j.value("sample_budget", s.sample_budget);
    s.workers = j.value("workers", s.workers);
    if (j.contains("pmf")) s.pmf = parse_pmf_mode(j.at("pmf").get<std::string>());
    if (j.contains("aggregation")) {
      s.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    }
    s.designer.aggregation = s.aggregation;
    if (j.contains("designer")) {
      const json& d = j.at("designer");
      s.designer.delta = d.value("delta", s.designer.delta);
      if (d.contains("pmf")) s.designer.pmf = parse_pmf_mode(d.at("pmf").get<std::string>());
      if (d.contains("aggregation")) {
        s.designer.aggregation = parse_aggregation(d.at("aggregation").get<std::string>());
      }
      s.designer.fixed_point = d.value("fixed_point", s.designer.fixed_point);
      s.designer.max_fixed_point_iterations =
          d.value("max_fixed_point_iterations", s.designer.max_fixed_point_iterations);
    }
    if (j.contains("opt")) {
      const json& o = j.at("opt");
      s.opt.grid_step = o.value("grid_step", s.opt.grid_step);
      const std::string v = o.value("verifier", std::string("simulate"));
      if (v != "simulate" && v != "bound") {
        throw Error(ErrorCode::kConfig, "unknown verifier '" + v + "'");
      }
      s.opt.verifier = v == "simulate" ? Verifier::kSimulate : Verifier::kBound;
      s.opt.sigmas = o.value("sigmas", s.opt.sigmas);
      s.opt.sample_budget = o.value("search_budget", s.opt.sample_budget);
    }

    if (j.contains("targets")) {
      std::vector<Target> raw;
      for (const json& t : j.at("targets")) {
        raw.push_back({t.at("x").get<double>(), t.at("eps").get<double>()});
      }
      const auto n = static_cast<std::size_t>(s.system.n);
      if (raw.empty()) {
        // same as omitting the key; written this way by to_json
      } else if (raw.size() == n) {
        s.targets = raw;
      } else if (raw.size() == 1) {
        s.targets.assign(n, raw.front());
      } else if (s.groups && raw.size() == s.groups->sizes.size()) {
        for (std::size_t g = 0; g < raw.size(); ++g) {
          for (int k = 0; k < s.groups->sizes[g]; ++k) s.targets.push_back(raw[g]);
        }
      } else {
        throw Error(ErrorCode::kConfig, "targets must be given per source, per group, or once");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad experiment field: ") + e.what());
  }

  s.system.validate();
  if (s.groups) {
    s.groups->validate(s.system.n);
    if (!s.group_weights.empty() && s.group_weights.size() != s.groups->sizes.size()) {
      throw Error(ErrorCode::kConfig, "groups.weights needs one entry per group");
    }
  }
  if (s.samples == 0) throw Error(ErrorCode::kConfig, "samples must be positive");
  if (s.workers < 1) throw Error(ErrorCode::kConfig, "workers must be positive");
  s.designer.validate();
  return s;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str());
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) {
    throw Error(ErrorCode::kValidation, "row width differs from the header");
  }
  rows_.push_back(std::move(row));
}

void Table::set_meta(const std::string& key, const std::string& value) {
  for (auto& kv : meta_) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  meta_.emplace_back(key, value);
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw Error(ErrorCode::kValidation, "no column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

void Table::write(std::ostream& os) const {
  for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << '\n';
  for (const auto& w : warnings_) os << "# warning: " << w << '\n';
  for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
}

void Table::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write(out);
  json m;
  for (const auto& [k, v] : meta_) {
    if (k == "spec") {
      m[k] = json::parse(v);
    } else {
      m[k] = v;
    }
  }
  m["columns"] = columns_;
  m["rows"] = rows_.size();
  m["warnings"] = warnings_;
  std::ofstream mf(path + ".manifest.json");
  if (!mf) throw Error(ErrorCode::kIo, "cannot write manifest for '" + path + "'");
  mf << m.dump(2) << '\n';
  if (!out || !mf) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fixed(v, 10);
}

void stamp_manifest(Table& t, const ExperimentSpec& spec) {
  t.set_meta("tool", std::string("paoi ") + kVersion);
  t.set_meta("kind", spec.kind);
  t.set_meta("seed", std::to_string(spec.system.seed));
  t.set_meta("spec", spec.to_json());
}

Table simulate_table(const ExperimentSpec& spec, SimulationResult* result_out) {
  require_budget(spec, spec.system.n);
  SimulationOptions so;
  so.target_samples = spec.samples;
  so.warmup_updates = spec.warmup;
  so.keep_records = true;
  so.max_records_per_source = static_cast<std::size_t>(spec.samples + spec.warmup + 1);
  SimulationResult r = run_simulation(spec.system, spec.resolved_weights(), so);
  Table t({"source", "k", "S", "W", "V", "D", "A", "T", "N", "I", "T_prime"});
  stamp_manifest(t, spec);
  for (const auto& per_source : r.records) {
    for (const PacketRecord& p : per_source) {
      if (!std::isfinite(p.paoi)) continue;
      t.add_row({std::to_string(p.source), std::to_string(p.k), format_cell(p.generated),
                 format_cell(p.waiting), format_cell(p.service), format_cell(p.departure),
                 format_cell(p.paoi), format_cell(p.busy), format_cell(p.idle),
                 std::to_string(p.preempted), format_cell(p.busy_after_arrival)});
    }
  }
  t.set_meta("lemma1_max_residual", format_cell(r.max_lemma1_residual()));
  if (result_out) *result_out = std::move(r);
  return t;
}

Table violation_table(const ExperimentSpec& spec, const SimulationResult& result) {
  Table t({"source", "x", "p_hat", "ci_halfwidth", "violations", "count", "flag"});
  stamp_manifest(t, spec);
  for (std::size_t s = 0; s < result.samples.size(); ++s) {
    std::vector<double> xs = spec.x_grid;
    if (xs.empty() && s < spec.targets.size()) xs.push_back(spec.targets[s].x);
    for (double x : xs) {
      const ViolationEstimate e = estimate_violation(result.samples[s], x);
      const bool ok = e.violations >= kReliableEvents;
      t.add_row({std::to_string(s), format_cell(x), ok ? format_cell(e.p_hat) : "below-floor",
                 ok ? format_cell(e.ci_halfwidth) : "below-floor", std::to_string(e.violations),
                 std::to_string(e.count), ok ? "ok" : "below-floor"});
    }
  }
  return t;
}

Table bound_table(const ExperimentSpec& spec) {
  const WeightVector mu = spec.resolved_weights();
  const GroupStructure groups = infer_groups(mu);
  Theorem1Options o;
  o.pmf = spec.pmf;
  o.aggregation = spec.aggregation;
  o.groups = &groups;
  Table t({"source", "x", "theorem1", "theorem1_theta", "theorem1_ell", "theorem1_vacuous",
           "theorem2", "theorem2_theta", "theorem2_admissible"});
  stamp_manifest(t, spec);
  struct Job {
    int source;
    double x;
  };
  std::vector<Job> jobs;
  for (int s = 0; s < spec.system.n; ++s) {
    std::vector<double> xs = spec.x_grid;
    if (xs.empty() && static_cast<std::size_t>(s) < spec.targets.size()) {
      xs.push_back(spec.targets[static_cast<std::size_t>(s)].x);
    }
    for (double x : xs) jobs.push_back({s, x});
  }
  if (jobs.empty()) throw Error(ErrorCode::kConfig, "bound needs x_grid or targets");
  std::vector<std::vector<std::string>> rows(jobs.size());
  detail::parallel_for(jobs.size(), spec.workers, [&](std::size_t k) {
    const Job& j = jobs[k];
    const BoundResult r1 = theorem1_bound(j.source, j.x, spec.system, mu, o);
    const BoundResult r2 = theorem2_bound(j.source, j.x, spec.system, mu);
    rows[k] = {std::to_string(j.source), format_cell(j.x), format_cell(r1.value),
               format_cell(r1.theta_star), std::to_string(r1.argmax_ell),
               r1.vacuous ? "1" : "0", format_cell(r2.value), format_cell(r2.theta_star),
               r2.admissible ? "1" : "0"};
  });
  for (auto& r : rows) t.add_row(std::move(r));
  t.set_meta("aggregation", aggregation_name(spec.aggregation));
  t.set_meta("pmf", pmf_mode_name(spec.pmf));
  return t;
}

DesignOutcome run_design(const ExperimentSpec& spec, DesignKind kind) {
  const ViolationSpec v = spec.violation_spec();
  return kind == DesignKind::kRandomizedL ? randomized_l(spec.system, v, spec.designer)
                                          : randomized_s(spec.system, v, spec.designer);
}

Table design_table(const ExperimentSpec& spec, const DesignOutcome& outcome) {
  Table t({"source", "x", "eps", "weight", "certified_bound", "theta_star", "minimal_weight"});
  stamp_manifest(t, spec);
  t.set_meta("algorithm", outcome.algorithm);
  t.set_meta("feasible", outcome.feasible ? "true" : "false");
  if (!outcome.reason.empty()) t.set_meta("reason", outcome.reason);
  for (std::size_t s = 0; s < spec.targets.size(); ++s) {
    auto cell = [&](const std::vector<double>& v) {
      return s < v.size() ? format_cell(v[s]) : std::string("none");
    };
    t.add_row({std::to_string(s), format_cell(spec.targets[s].x),
               format_cell(spec.targets[s].eps),
               outcome.weights ? format_cell((*outcome.weights)[s]) : "none",
               cell(outcome.certified_bounds), cell(outcome.theta_star),
               cell(outcome.minimal_weights)});
  }
  return t;
}

OptSearchResult run_opt_search(const ExperimentSpec& spec) {
  if (!spec.groups) throw Error(ErrorCode::kConfig, "opt-search needs a group structure");
  if (spec.opt.verifier == Verifier::kSimulate) require_budget(spec, spec.system.n);
  OptSearchOptions o = spec.opt;
  o.samples_per_source = spec.samples;
  o.warmup_updates = spec.warmup;
  o.workers = spec.workers;
  return optimal_search(spec.system, spec.violation_spec(), *spec.groups, o);
}

Table opt_search_table(const ExperimentSpec& spec, const OptSearchResult& result) {
  std::vector<std::string> cols{"candidate"};
  const std::size_t g = spec.groups ? spec.groups->sizes.size() : 0;
  for (std::size_t k = 0; k < g; ++k) cols.push_back("mu_group" + std::to_string(k + 1));
  for (const char* c : {"feasible", "below_floor", "frontier", "worst_source", "worst_upper"}) {
    cols.emplace_back(c);
  }
  Table t(cols);
  stamp_manifest(t, spec);
  const ViolationSpec v = spec.violation_spec();
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    const OptCandidate& cand = result.candidates[c];
    const OptVerdict verdict = judge_candidate(cand, v, spec.opt.verifier, spec.opt.sigmas);
    std::size_t worst = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    double worst_upper = 0.0;
    for (std::size_t s = 0; s < cand.checks.size(); ++s) {
      const double upper = cand.checks[s].p_hat + spec.opt.sigmas * cand.checks[s].ci_halfwidth;
      if (upper - v[s].eps > worst_margin) {
        worst_margin = upper - v[s].eps;
        worst = s;
        worst_upper = upper;
      }
    }
    std::vector<std::string> row{std::to_string(c)};
    for (double w : cand.group_weights) row.push_back(format_cell(w));
    const bool frontier =
        std::find(result.frontier.begin(), result.frontier.end(), c) != result.frontier.end();
    row.push_back(verdict.feasible ? "1" : "0");
    row.push_back(verdict.below_floor ? "1" : "0");
    row.push_back(frontier ? "1" : "0");
    row.push_back(std::to_string(worst));
    row.push_back(format_cell(worst_upper));
    t.add_row(std::move(row));
  }
  t.set_meta("samples_used", std::to_string(result.samples_used));
  return t;
}

std::optional<double> RegionSweep::min_eps2_l() const {
  std::optional<double> best;
  for (const auto& p : points) {
    if (p.l && (!best || p.eps2 < *best)) best = p.eps2;
  }
  return best;
}

std::optional<double> RegionSweep::min_eps2_s() const {
  std::optional<double> best;
  for (const auto& p : points) {
    if (p.s && (!best || p.eps2 < *best)) best = p.eps2;
  }
  return best;
}

std::optional<double> RegionSweep::min_eps2_opt() const {
  std::optional<double> best;
  for (const auto& p : points) {
    if (p.opt_range && (!best || p.eps2 < *best)) best = p.eps2;
  }
  return best;
}

RegionSweep region_sweep(const ExperimentSpec& spec) {
  if (!spec.groups || spec.groups->sizes.size() != 2) {
    throw Error(ErrorCode::kConfig, "region sweep needs exactly two groups");
  }
  if (spec.eps_grid.empty()) throw Error(ErrorCode::kConfig, "region sweep needs eps_grid");
  const GroupStructure& groups = *spec.groups;
  if (static_cast<int>(spec.targets.size()) != spec.system.n) {
    throw Error(ErrorCode::kConfig, "region sweep needs a threshold for every source");
  }

  auto targets_at = [&](double eps2) {
    ViolationSpec v{spec.targets};
    for (int s = 0; s < spec.system.n; ++s) {
      v.targets[static_cast<std::size_t>(s)].eps = groups.group_of(s) == 0 ? spec.eps1 : eps2;
    }
    v.validate(spec.system.n, spec.system.b);
    return v;
  };

  RegionSweep out;
  out.points.resize(spec.eps_grid.size());
  detail::parallel_for(spec.eps_grid.size(), spec.workers, [&](std::size_t k) {
    RegionPoint& p = out.points[k];
    p.eps2 = spec.eps_grid[k];
    const ViolationSpec v = targets_at(p.eps2);
    for (DesignKind kind : {DesignKind::kRandomizedL, DesignKind::kRandomizedS}) {
      const DesignOutcome d = kind == DesignKind::kRandomizedL
                                  ? randomized_l(spec.system, v, spec.designer)
                                  : randomized_s(spec.system, v, spec.designer);
      if (!d.feasible) continue;
      const auto totals = group_totals(groups, *d.weights);
      (kind == DesignKind::kRandomizedL ? p.l : p.s) = std::make_pair(totals[0], totals[1]);
    }
  });

  // the baseline's candidates depend on thresholds only, so simulate once
  if (spec.opt.verifier == Verifier::kSimulate) require_budget(spec, spec.system.n);
  OptSearchOptions o = spec.opt;
  o.samples_per_source = spec.samples;
  o.warmup_updates = spec.warmup;
  o.workers = spec.workers;
  const std::vector<OptCandidate> cands =
      evaluate_group_grid(spec.system, targets_at(1.0), groups, o);
  for (RegionPoint& p : out.points) {
    const ViolationSpec v = targets_at(p.eps2);
    for (const OptCandidate& c : cands) {
      const OptVerdict verdict = judge_candidate(c, v, o.verifier, o.sigmas);
      p.opt_below_floor = p.opt_below_floor || verdict.below_floor;
      if (!verdict.feasible) continue;
      const double w1 = c.group_weights[0];
      if (!p.opt_range) {
        p.opt_range = std::make_pair(w1, w1);
      } else {
        p.opt_range->first = std::min(p.opt_range->first, w1);
        p.opt_range->second = std::max(p.opt_range->second, w1);
      }
    }
  }
  return out;
}

Table region_table(const ExperimentSpec& spec, const RegionSweep& sweep) {
  Table t({"eps2", "l_mu1", "l_mu2", "l_ratio", "s_mu1", "s_mu2", "s_ratio", "opt_mu1_min",
           "opt_mu1_max", "opt_ratio_min", "opt_ratio_max", "opt_status"});
  stamp_manifest(t, spec);
  auto pair_cells = [](const std::optional<std::pair<double, double>>& p) {
    if (!p) return std::vector<std::string>{"none", "none", "none"};
    return std::vector<std::string>{format_cell(p->first), format_cell(p->second),
                                    format_cell(p->first / p->second)};
  };
  for (const RegionPoint& p : sweep.points) {
    std::vector<std::string> row{format_cell(p.eps2)};
    for (auto& c : pair_cells(p.l)) row.push_back(c);
    for (auto& c : pair_cells(p.s)) row.push_back(c);
    if (p.opt_range) {
      const auto [lo, hi] = *p.opt_range;
      row.push_back(format_cell(lo));
      row.push_back(format_cell(hi));
      row.push_back(format_cell(lo / (1.0 - lo)));
      row.push_back(format_cell(hi / (1.0 - hi)));
      row.emplace_back("feasible");
    } else {
      for (int k = 0; k < 4; ++k) row.emplace_back("none");
      row.emplace_back(p.opt_below_floor ? "below-floor" : "none");
    }
    t.add_row(std::move(row));
  }
  const auto show = [](std::optional<double> v) { return v ? format_cell(*v) : "none"; };
  t.set_meta("min_eps2_l", show(sweep.min_eps2_l()));
  t.set_meta("min_eps2_s", show(sweep.min_eps2_s()));
  t.set_meta("min_eps2_opt", show(sweep.min_eps2_opt()));
  return t;
}

std::vector<DecayRow> decay_sweep(const ExperimentSpec& spec) {
  if (spec.n_sweep.empty()) throw Error(ErrorCode::kConfig, "decay needs n_sweep");
  if (!(spec.b_prime > 0.0) || spec.x_prime.empty()) {
    throw Error(ErrorCode::kConfig, "decay needs b_prime and x_prime");
  }
  const auto g = static_cast<int>(spec.x_prime.size());
  std::vector<double> gw = spec.group_weights;
  if (gw.empty()) gw.assign(static_cast<std::size_t>(g), 1.0 / g);
  if (static_cast<int>(gw.size()) != g) {
    throw Error(ErrorCode::kConfig, "need one group weight per x_prime entry");
  }
  for (double xp : spec.x_prime) {
    if (!(xp > spec.b_prime)) throw Error(ErrorCode::kConfig, "x_prime must exceed b_prime");
  }
  for (int n : spec.n_sweep) require_budget(spec, n);

  std::vector<std::vector<DecayRow>> per_n(spec.n_sweep.size());
  detail::parallel_for(spec.n_sweep.size(), spec.workers, [&](std::size_t k) {
    const int n = spec.n_sweep[k];
    SystemConfig cfg = spec.system;
    cfg.n = n;
    cfg.b = n * spec.b_prime;
    cfg.seed = detail::derive_seed(spec.system.seed, static_cast<std::uint64_t>(n));
    const GroupStructure groups = equal_groups(n, g);
    const WeightVector mu = groups.expand(gw);

    SimulationOptions so;
    so.target_samples = spec.samples;
    so.warmup_updates = spec.warmup;
    const SimulationResult sim = run_simulation(cfg, mu, so);

    Theorem1Options o;
    o.pmf = spec.pmf;
    o.aggregation = spec.aggregation;
    o.groups = &groups;
    for (int grp = 0; grp < g; ++grp) {
      const auto gu = static_cast<std::size_t>(grp);
      const int first = groups.first_source(grp);
      const double x = n * spec.x_prime[gu];
      // sources within a group are exchangeable; pool their samples
      std::vector<double> pooled;
      for (int s = first; s < first + groups.sizes[gu]; ++s) {
        const auto& v = sim.samples[static_cast<std::size_t>(s)];
        pooled.insert(pooled.end(), v.begin(), v.end());
      }
      DecayRow row{};
      row.n = n;
      row.group = grp;
      row.x = x;
      row.estimate = estimate_violation(pooled, x);
      row.reliable = row.estimate.violations >= kReliableEvents;
      row.theorem1 = theorem1_bound(first, x, cfg, mu, o).value;
      const BoundResult t2 = theorem2_bound(first, x, cfg, mu);
      row.theorem2 = t2.value;
      row.theorem2_admissible = t2.admissible;
      row.corollary1_rate = corollary1_rate(first, spec.x_prime[gu], spec.b_prime, mu,
                                            cfg.service, o.search, spec.pmf, &groups)
                                .rate;
      row.corollary2_rate = corollary2_rate(spec.x_prime[gu], spec.b_prime,
                                            mu[static_cast<std::size_t>(first)], cfg.service);
      per_n[k].push_back(row);
    }
  });
  std::vector<DecayRow> rows;
  for (auto& v : per_n) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

Table decay_table(const ExperimentSpec& spec, const std::vector<DecayRow>& rows) {
  Table t({"n", "group", "x", "p_hat", "ci_halfwidth", "log10_p_hat", "violations", "count",
           "flag", "theorem1", "theorem2", "theorem2_admissible", "corollary1_rate",
           "corollary2_rate"});
  stamp_manifest(t, spec);
  for (const DecayRow& r : rows) {
    const auto& e = r.estimate;
    if (!r.reliable) {
      t.warn("n=" + std::to_string(r.n) + " group " + std::to_string(r.group + 1) + ": only " +
             std::to_string(e.violations) + " violation events, CI unreliable");
    }
    t.add_row({std::to_string(r.n), std::to_string(r.group + 1), format_cell(r.x),
               r.reliable ? format_cell(e.p_hat) : "below-floor",
               r.reliable ? format_cell(e.ci_halfwidth) : "below-floor",
               r.reliable ? format_cell(std::log10(e.p_hat)) : "below-floor",
               std::to_string(e.violations), std::to_string(e.count),
               r.reliable ? "ok" : "below-floor", format_cell(r.theorem1), format_cell(r.theorem2),
               r.theorem2_admissible ? "1" : "0", format_cell(r.corollary1_rate),
               format_cell(r.corollary2_rate)});
  }
  return t;
}

namespace {

ValidationCheck check(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

SimulationResult quick_run(const SystemConfig& c, const WeightVector& w, std::uint64_t samples,
                           bool records = false) {
  SimulationOptions so;
  so.target_samples = samples;
  so.keep_records = records;
  so.max_records_per_source = static_cast<std::size_t>(samples + so.warmup_updates + 1);
  return run_simulation(c, w, so);
}

}  // namespace

std::vector<ValidationCheck> run_validation(const ExperimentSpec& spec) {
  const std::uint64_t seed = spec.system.seed;
  std::vector<ValidationCheck> out;

  {
    SystemConfig c{3, 4.0, ServiceModel::exponential(1.0), seed};
    const WeightVector w = WeightVector::validate(std::vector<double>{0.2, 0.3, 0.5});
    const SimulationResult r = quick_run(c, w, 20000, true);
    bool exact = true;
    bool nonneg = true;
    double worst = 0.0;
    for (const auto& recs : r.records) {
      for (const PacketRecord& p : recs) {
        exact = exact && p.departure == p.generated + p.waiting + p.service;
        nonneg = nonneg && p.waiting >= 0 && p.service >= 0 && p.busy >= 0 && p.idle >= 0 &&
                 p.busy_after_arrival >= 0;
      }
      worst = std::max(worst, check_lemma1_residuals(recs, c.b));
    }
    out.push_back(check("departure-identity", exact, "D = S + W + V on every record"));
    out.push_back(check("durations-nonnegative", nonneg, "W, V, T, N, T' >= 0"));
    const double cap = 1e-9 * static_cast<double>(r.periods);
    out.push_back(check("lemma1-residual", worst <= cap,
                        "max residual " + format_cell(worst) + " <= " + format_cell(cap)));
    bool above = true;
    for (const auto& v : r.samples) {
      for (double a : v) above = above && a > c.b;
    }
    out.push_back(check("paoi-exceeds-period", above, "every sample > b"));
    bool conserved = true;
    for (const SourceStats& s : r.stats) {
      conserved = conserved && s.received + s.preempted + (s.queued_at_end ? 1 : 0) +
                                       (s.in_service_at_end ? 1 : 0) ==
                                   s.generated;
    }
    out.push_back(check("conservation", conserved,
                        "received + preempted + in system = generated per source"));
    const SimulationResult again = quick_run(c, w, 20000);
    out.push_back(check("reproducibility", again.samples == r.samples,
                        "same seed gives identical sample streams"));
  }
  {
    SystemConfig c{1, 10.0, ServiceModel::deterministic(2.0), seed};
    const SimulationResult r = quick_run(c, WeightVector::uniform(1), 1000);
    const bool ok = std::all_of(r.samples[0].begin(), r.samples[0].end(),
                                [](double a) { return a == 12.0; });
    out.push_back(check("single-source-constant", ok, "n=1, V=2, b=10 gives A = 12"));
  }
  {
    SystemConfig c{2, 10.0, ServiceModel::deterministic(1.0), seed};
    const SimulationResult r = quick_run(c, WeightVector::uniform(2), 40000, true);
    bool values = true;
    std::uint64_t elevens = 0;
    for (double a : r.samples[0]) {
      values = values && (a == 11.0 || a == 12.0);
      elevens += a == 11.0;
    }
    const double m = static_cast<double>(r.samples[0].size());
    const double frac = elevens / m;
    const bool freq = std::abs(frac - 0.5) <= 3.0 * std::sqrt(0.25 / m);
    out.push_back(check("two-source-values", values && freq,
                        "A in {11, 12}, fraction of 11 = " + format_cell(frac)));
    const RegimeCheck rc = regime_bound_check(r.records[0], Regime::kLong, c, 1);
    out.push_back(check("long-regime-slack", rc.min_slack >= 0.0,
                        "min slack " + format_cell(rc.min_slack)));
  }
  {
    SystemConfig c{4, 10.0, ServiceModel::deterministic(3.0), seed};
    const SimulationResult r = quick_run(c, WeightVector::uniform(4), 5000, true);
    double slack = std::numeric_limits<double>::infinity();
    bool ok = true;
    try {
      for (const auto& recs : r.records) {
        slack = std::min(slack, regime_bound_check(recs, Regime::kShort, c, 10).min_slack);
      }
    } catch (const Error&) {
      ok = false;
    }
    out.push_back(check("short-regime-slack", ok && slack >= 0.0,
                        "min slack " + format_cell(slack)));
  }
  {
    SystemConfig c{3, 10.0, ServiceModel::exponential_mean(8.0), seed};
    const WeightVector w = WeightVector::validate(std::vector<double>{0.2, 0.3, 0.5});
    const SimulationResult r = quick_run(c, w, 60000);
    bool ok = r.full_decisions >= 100000;
    const double m = static_cast<double>(r.full_decisions);
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double f = r.full_choice_counts[i] / m;
      const double z = std::abs(f - w[i]) / std::sqrt(w[i] * (1.0 - w[i]) / m);
      worst = std::max(worst, z);
    }
    ok = ok && worst <= 3.0;
    out.push_back(check("scheduling-frequencies", ok,
                        std::to_string(r.full_decisions) + " full-queue decisions, worst z " +
                            format_cell(worst)));
  }
  {
    Rng rng(seed);
    std::vector<double> raw(6);
    for (double& v : raw) v = 0.05 + uniform01(rng);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (double& v : raw) v /= total;
    const WeightVector w = WeightVector::validate(raw);
    double worst_sum = 0.0;
    double worst_diff = 0.0;
    std::vector<double> sums(7, 0.0);
    for (unsigned mask = 0; mask < 64; ++mask) {
      std::vector<std::uint8_t> y(6);
      for (unsigned j = 0; j < 6; ++j) y[j] = (mask >> j) & 1U;
      const DrawOutcome o(std::move(y), w);
      const double q = pmf_quadrature(o, w);
      sums[static_cast<std::size_t>(o.drawn())] += q;
      worst_diff = std::max(worst_diff, std::abs(q - pmf_oracle(o, w)));
    }
    for (double s : sums) worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    out.push_back(check("wallenius-normalization", worst_sum <= 1e-8,
                        "max |sum - 1| " + format_cell(worst_sum)));
    out.push_back(check("wallenius-oracle", worst_diff <= 1e-8,
                        "max |quadrature - oracle| " + format_cell(worst_diff)));
  }
  {
    const double v = theorem2_bound(0.5, 10.0, 0.0, ServiceModel::exponential(1.0)).value;
    const double expect = 5.0 * std::exp(-4.0);
    out.push_back(check("short-bound-closed-form", std::abs(v - expect) <= 1e-6,
                        format_cell(v) + " vs " + format_cell(expect)));
  }
  {
    SystemConfig c{2, 10.0, ServiceModel::deterministic(1.0), seed};
    Theorem1Options o;
    o.aggregation = Aggregation::kAsPrinted;
    const double v = theorem1_bound(0, 14.0, c, WeightVector::uniform(2), o).value;
    out.push_back(check("long-bound-hand-instance", std::abs(v - 0.25) <= 1e-6, format_cell(v)));
  }
  {
    SystemConfig c{6, 30.0, ServiceModel::exponential_mean(1.5), seed};
    const WeightVector w = WeightVector::uniform(6);
    const SimulationResult r = quick_run(c, w, 100000);
    const GroupStructure g{{6}};
    Theorem1Options o;
    o.groups = &g;
    bool ok = true;
    std::string detail;
    for (double x : {36.0, 42.0}) {
      const double bound = theorem1_bound(0, x, c, w, o).value;
      const ViolationEstimate e = estimate_violation(r.samples[0], x);
      ok = ok && e.p_hat - 3.0 * e.ci_halfwidth <= bound;
      detail += "x=" + format_cell(x) + " p=" + format_cell(e.p_hat) + " bound=" +
                format_cell(bound) + " ";
    }
    out.push_back(check("long-bound-dominance", ok, detail));
  }
  {
    SystemConfig c{3, 30.0, ServiceModel::exponential_mean(1.5), seed};
    const ViolationSpec v{{{40.0, 0.2}, {45.0, 0.05}, {50.0, 0.3}}};
    DesignerConfig d;
    d.delta = 0.05;
    const DesignOutcome a = randomized_s(c, v, d);
    const DesignOutcome b = randomized_s(c, v, d);
    const DesignOutcome la = randomized_l(c, v, d);
    const DesignOutcome lb = randomized_l(c, v, d);
    const bool same = a.minimal_weights == b.minimal_weights &&
                      a.certified_bounds == b.certified_bounds &&
                      la.certified_bounds == lb.certified_bounds && la.feasible == lb.feasible;
    out.push_back(check("designer-determinism", same, "repeated designs are identical"));
    const ViolationSpec p{{v[2], v[0], v[1]}};
    const DesignOutcome ps = randomized_s(c, p, d);
    const bool perm = ps.minimal_weights.size() == 3 &&
                      ps.minimal_weights[0] == a.minimal_weights[2] &&
                      ps.minimal_weights[1] == a.minimal_weights[0] &&
                      ps.minimal_weights[2] == a.minimal_weights[1];
    out.push_back(check("short-design-permutation", perm,
                        "permuting sources permutes minimal weights"));
  }
  return out;
}

Table validation_table(const ExperimentSpec& spec, const std::vector<ValidationCheck>& checks) {
  Table t({"check", "status", "detail"});
  stamp_manifest(t, spec);
  for (const auto& c : checks) {
    std::string d = c.detail;
    std::replace(d.begin(), d.end(), ',', ';');
    t.add_row({c.name, c.passed ? "pass" : "fail", d});
  }
  return t;
}

}  // namespace paoi
