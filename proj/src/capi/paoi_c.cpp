// SPDX-License-Identifier: Apache-2.0
#include "paoi/paoi.h"

#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <span>
#include <sstream>
#include <string>

#include "paoi/designer.hpp"
#include "paoi/errors.hpp"
#include "paoi/experiments.hpp"

struct paoi_system {
  paoi::SystemConfig config;
};

struct paoi_simulation {
  paoi::SimulationResult result;
};

struct paoi_experiment {
  paoi::ExperimentSpec spec;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_summary;

paoi_status fail(paoi_status s, std::string message) {
  g_last_error = std::move(message);
  return s;
}

// Every entry point funnels through here so no exception crosses the ABI.
template <class F>
paoi_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return PAOI_OK;
  } catch (const paoi::Error& e) {
    return fail(static_cast<paoi_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PAOI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PAOI_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PAOI_ERR_INTERNAL, "unknown failure");
  }
}

#define PAOI_REQUIRE(ptr)                                               \
  do {                                                                  \
    if ((ptr) == nullptr) return fail(PAOI_ERR_NULL_ARGUMENT, #ptr " is null"); \
  } while (0)

paoi::PmfMode to_mode(paoi_pmf_mode m) {
  switch (m) {
    case PAOI_PMF_QUADRATURE: return paoi::PmfMode::kQuadrature;
    case PAOI_PMF_FOG: return paoi::PmfMode::kFog;
    case PAOI_PMF_ORACLE: return paoi::PmfMode::kOracle;
  }
  throw paoi::Error(paoi::ErrorCode::kConfig, "unknown pmf mode");
}

paoi::WeightVector to_weights(const double* w, std::size_t n) {
  return paoi::WeightVector::validate(std::span<const double>(w, n));
}

const char* command_name(paoi_command c) {
  switch (c) {
    case PAOI_CMD_SIMULATE: return "simulate";
    case PAOI_CMD_BOUND: return "bound";
    case PAOI_CMD_DESIGN_L: return "design-l";
    case PAOI_CMD_DESIGN_S: return "design-s";
    case PAOI_CMD_OPT_SEARCH: return "opt-search";
    case PAOI_CMD_REGION_SWEEP: return "region-sweep";
    case PAOI_CMD_DECAY: return "decay";
    case PAOI_CMD_VALIDATE: return "validate";
  }
  return nullptr;
}

void emit(const paoi::Table& t, const char* out_path) {
  if (out_path) {
    t.save(out_path);
  } else {
    t.write(std::cout);
  }
}

}  // namespace

extern "C" {

const char* paoi_last_error(void) { return g_last_error.c_str(); }
const char* paoi_last_summary(void) { return g_last_summary.c_str(); }
const char* paoi_version(void) { return paoi::kVersion; }

const char* paoi_status_name(paoi_status status) {
  switch (status) {
    case PAOI_OK: return "ok";
    case PAOI_ERR_NULL_ARGUMENT: return "null-argument";
    case PAOI_ERR_INTERNAL: return "internal";
    default: break;
  }
  if (status >= PAOI_ERR_DOMAIN && status <= PAOI_ERR_IO) {
    return paoi::error_code_name(static_cast<paoi::ErrorCode>(static_cast<int>(status)));
  }
  return "unknown";
}

paoi_status paoi_system_create(int n, double b, paoi_service_kind kind, double parameter,
                               uint64_t seed, paoi_system** out) {
  PAOI_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    if (kind != PAOI_SERVICE_EXPONENTIAL && kind != PAOI_SERVICE_DETERMINISTIC) {
      throw paoi::Error(paoi::ErrorCode::kConfig, "unknown service kind");
    }
    paoi::ServiceModel service = kind == PAOI_SERVICE_EXPONENTIAL
                                     ? paoi::ServiceModel::exponential(parameter)
                                     : paoi::ServiceModel::deterministic(parameter);
    auto sys = std::make_unique<paoi_system>(paoi_system{{n, b, service, seed}});
    sys->config.validate();
    *out = sys.release();
  });
}

void paoi_system_free(paoi_system* sys) { delete sys; }

paoi_status paoi_log_mgf(const paoi_system* sys, double theta, double* out) {
  PAOI_REQUIRE(sys);
  PAOI_REQUIRE(out);
  return guarded([&] { *out = sys->config.service.log_mgf(theta); });
}

paoi_status paoi_simulate(const paoi_system* sys, const double* weights, size_t n_weights,
                          uint64_t target_samples, uint64_t warmup_updates,
                          paoi_simulation** out) {
  PAOI_REQUIRE(sys);
  PAOI_REQUIRE(weights);
  PAOI_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    paoi::SimulationOptions so;
    so.target_samples = target_samples;
    so.warmup_updates = warmup_updates;
    auto sim = std::make_unique<paoi_simulation>();
    sim->result = paoi::run_simulation(sys->config, to_weights(weights, n_weights), so);
    *out = sim.release();
  });
}

void paoi_simulation_free(paoi_simulation* sim) { delete sim; }

paoi_status paoi_simulation_samples(const paoi_simulation* sim, int source,
                                    const double** samples, size_t* count) {
  PAOI_REQUIRE(sim);
  PAOI_REQUIRE(samples);
  PAOI_REQUIRE(count);
  if (source < 0 || static_cast<std::size_t>(source) >= sim->result.samples.size()) {
    return fail(PAOI_ERR_DOMAIN, "source index out of range");
  }
  const auto& v = sim->result.samples[static_cast<std::size_t>(source)];
  *samples = v.data();
  *count = v.size();
  return PAOI_OK;
}

paoi_status paoi_simulation_lemma1_residual(const paoi_simulation* sim, double* out) {
  PAOI_REQUIRE(sim);
  PAOI_REQUIRE(out);
  *out = sim->result.max_lemma1_residual();
  return PAOI_OK;
}

paoi_status paoi_estimate_violation(const double* samples, size_t count, double x, double* p_hat,
                                    double* ci_halfwidth) {
  PAOI_REQUIRE(p_hat);
  PAOI_REQUIRE(ci_halfwidth);
  if (count > 0) PAOI_REQUIRE(samples);
  return guarded([&] {
    const auto e = paoi::estimate_violation(std::span<const double>(samples, count), x);
    *p_hat = e.p_hat;
    *ci_halfwidth = e.ci_halfwidth;
  });
}

paoi_status paoi_wallenius_pmf(const uint8_t* drawn, const double* weights, size_t n,
                               paoi_pmf_mode mode, double* out) {
  PAOI_REQUIRE(drawn);
  PAOI_REQUIRE(weights);
  PAOI_REQUIRE(out);
  return guarded([&] {
    const paoi::WeightVector mu = to_weights(weights, n);
    const paoi::DrawOutcome y(std::vector<std::uint8_t>(drawn, drawn + n), mu);
    *out = paoi::pmf(y, mu, to_mode(mode));
  });
}

paoi_status paoi_long_bound(const paoi_system* sys, const double* weights, size_t n, int source,
                            double x, paoi_pmf_mode mode, double* bound, double* theta_star) {
  PAOI_REQUIRE(sys);
  PAOI_REQUIRE(weights);
  PAOI_REQUIRE(bound);
  return guarded([&] {
    paoi::Theorem1Options o;
    o.pmf = to_mode(mode);
    const auto r = paoi::theorem1_bound(source, x, sys->config, to_weights(weights, n), o);
    *bound = r.value;
    if (theta_star) *theta_star = r.theta_star;
  });
}

paoi_status paoi_short_bound(const paoi_system* sys, double mu_i, double x, double* bound,
                             double* theta_star, int* admissible) {
  PAOI_REQUIRE(sys);
  PAOI_REQUIRE(bound);
  return guarded([&] {
    const auto r = paoi::theorem2_bound(mu_i, x, sys->config.b, sys->config.service);
    *bound = r.value;
    if (theta_star) *theta_star = r.theta_star;
    if (admissible) *admissible = r.admissible ? 1 : 0;
  });
}

paoi_status paoi_design(const paoi_system* sys, paoi_design_kind kind, const double* x,
                        const double* eps, size_t n, double delta, double* weights_out,
                        int* feasible) {
  PAOI_REQUIRE(sys);
  PAOI_REQUIRE(x);
  PAOI_REQUIRE(eps);
  PAOI_REQUIRE(weights_out);
  PAOI_REQUIRE(feasible);
  return guarded([&] {
    paoi::ViolationSpec v;
    for (std::size_t i = 0; i < n; ++i) v.targets.push_back({x[i], eps[i]});
    paoi::DesignerConfig d;
    d.delta = delta;
    const paoi::DesignOutcome o = kind == PAOI_DESIGN_LONG
                                      ? paoi::randomized_l(sys->config, v, d)
                                      : paoi::randomized_s(sys->config, v, d);
    *feasible = o.feasible ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
      weights_out[i] = o.feasible ? (*o.weights)[i] : 0.0;
    }
    g_last_summary = o.reason;
  });
}

paoi_status paoi_experiment_load(const char* path, paoi_experiment** out) {
  PAOI_REQUIRE(path);
  PAOI_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new paoi_experiment{paoi::load_experiment(path)};
  });
}

paoi_status paoi_experiment_parse(const char* json, paoi_experiment** out) {
  PAOI_REQUIRE(json);
  PAOI_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new paoi_experiment{paoi::parse_experiment(json)};
  });
}

void paoi_experiment_free(paoi_experiment* exp) { delete exp; }

paoi_status paoi_experiment_set_seed(paoi_experiment* exp, uint64_t seed) {
  PAOI_REQUIRE(exp);
  exp->spec.system.seed = seed;
  return PAOI_OK;
}

paoi_status paoi_experiment_set_samples(paoi_experiment* exp, uint64_t samples) {
  PAOI_REQUIRE(exp);
  if (samples == 0) return fail(PAOI_ERR_CONFIG, "samples must be positive");
  exp->spec.samples = samples;
  return PAOI_OK;
}

paoi_status paoi_experiment_set_workers(paoi_experiment* exp, int workers) {
  PAOI_REQUIRE(exp);
  if (workers < 1) return fail(PAOI_ERR_CONFIG, "workers must be positive");
  exp->spec.workers = workers;
  return PAOI_OK;
}

paoi_status paoi_experiment_set_pmf(paoi_experiment* exp, paoi_pmf_mode mode) {
  PAOI_REQUIRE(exp);
  return guarded([&] {
    exp->spec.pmf = to_mode(mode);
    exp->spec.designer.pmf = exp->spec.pmf;
  });
}

paoi_status paoi_experiment_run(const paoi_experiment* exp, paoi_command command,
                                 const char* out_path, paoi_run_result* result) {
  PAOI_REQUIRE(exp);
  const char* name = command_name(command);
  if (!name) return fail(PAOI_ERR_CONFIG, "unknown command");
  return guarded([&] {
    paoi::ExperimentSpec spec = exp->spec;
    spec.kind = name;
    paoi_run_result r{0, 0};
    std::ostringstream summary;
    switch (command) {
      case PAOI_CMD_SIMULATE: {
        paoi::SimulationResult sim;
        const paoi::Table t = paoi::simulate_table(spec, &sim);
        emit(t, out_path);
        r.rows = t.rows().size();
        if (!spec.x_grid.empty() || !spec.targets.empty()) {
          const paoi::Table v = paoi::violation_table(spec, sim);
          if (out_path) {
            v.save(std::string(out_path) + ".violations.csv");
          } else {
            v.write(summary);
          }
        }
        summary << "lemma-1 max residual " << sim.max_lemma1_residual() << '\n';
        break;
      }
      case PAOI_CMD_BOUND: {
        const paoi::Table t = paoi::bound_table(spec);
        emit(t, out_path);
        r.rows = t.rows().size();
        break;
      }
      case PAOI_CMD_DESIGN_L:
      case PAOI_CMD_DESIGN_S: {
        const auto outcome = paoi::run_design(
            spec, command == PAOI_CMD_DESIGN_L ? paoi::DesignKind::kRandomizedL
                                               : paoi::DesignKind::kRandomizedS);
        const paoi::Table t = paoi::design_table(spec, outcome);
        emit(t, out_path);
        r.rows = t.rows().size();
        const std::string report = paoi::design_report_json(outcome, spec.violation_spec());
        if (out_path) {
          std::ofstream js(std::string(out_path) + ".json");
          js << report << '\n';
          if (!js) throw paoi::Error(paoi::ErrorCode::kIo, "cannot write design report");
        }
        summary << (outcome.feasible ? "feasible" : "infeasible: " + outcome.reason) << '\n';
        r.negative = outcome.feasible ? 0 : 1;
        break;
      }
      case PAOI_CMD_OPT_SEARCH: {
        const auto res = paoi::run_opt_search(spec);
        const paoi::Table t = paoi::opt_search_table(spec, res);
        emit(t, out_path);
        r.rows = t.rows().size();
        summary << res.feasible.size() << " of " << res.candidates.size()
                << " candidates feasible\n";
        r.negative = res.feasible.empty() ? 1 : 0;
        break;
      }
      case PAOI_CMD_REGION_SWEEP: {
        const paoi::Table t = paoi::region_table(spec, paoi::region_sweep(spec));
        emit(t, out_path);
        r.rows = t.rows().size();
        break;
      }
      case PAOI_CMD_DECAY: {
        const paoi::Table t = paoi::decay_table(spec, paoi::decay_sweep(spec));
        emit(t, out_path);
        r.rows = t.rows().size();
        for (const auto& w : t.warnings()) summary << "warning: " << w << '\n';
        break;
      }
      case PAOI_CMD_VALIDATE: {
        const auto checks = paoi::run_validation(spec);
        const paoi::Table t = paoi::validation_table(spec, checks);
        emit(t, out_path);
        r.rows = t.rows().size();
        for (const auto& c : checks) {
          summary << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
          if (!c.passed) r.negative = 1;
        }
        break;
      }
    }
    g_last_summary = summary.str();
    if (result) *result = r;
  });
}

}  // extern "C"
