// SPDX-License-Identifier: Apache-2.0
// Experiment driver. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "paoi/paoi.h"

namespace {

constexpr int kExitInfeasible = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<int> workers;
  std::optional<std::string> pmf;
};

int exit_code_for(paoi_status s) {
  switch (s) {
    case PAOI_OK: return 0;
    case PAOI_ERR_CONFIG:
    case PAOI_ERR_VALIDATION:
    case PAOI_ERR_IO:
    case PAOI_ERR_NULL_ARGUMENT: return kExitConfig;
    default: return kExitFailure;
  }
}

int report(paoi_status s) {
  std::cerr << "paoi: " << paoi_status_name(s) << ": " << paoi_last_error() << '\n';
  return exit_code_for(s);
}

int run(const Common& c, paoi_command command) {
  paoi_experiment* exp = nullptr;
  // validate runs on built-in instances; without a config it only needs a seed
  paoi_status s = c.config.empty() ? paoi_experiment_parse("{}", &exp)
                                   : paoi_experiment_load(c.config.c_str(), &exp);
  if (s != PAOI_OK) return report(s);
  if (c.seed) s = paoi_experiment_set_seed(exp, *c.seed);
  if (s == PAOI_OK && c.samples) s = paoi_experiment_set_samples(exp, *c.samples);
  if (s == PAOI_OK && c.workers) s = paoi_experiment_set_workers(exp, *c.workers);
  if (s == PAOI_OK && c.pmf) {
    static const std::map<std::string, paoi_pmf_mode> modes{
        {"quadrature", PAOI_PMF_QUADRATURE}, {"fog", PAOI_PMF_FOG}, {"oracle", PAOI_PMF_ORACLE}};
    s = paoi_experiment_set_pmf(exp, modes.at(*c.pmf));
  }
  paoi_run_result result{};
  if (s == PAOI_OK) {
    s = paoi_experiment_run(exp, command, c.out.empty() ? nullptr : c.out.c_str(), &result);
  }
  paoi_experiment_free(exp);
  if (s != PAOI_OK) return report(s);
  // keep stdout clean for the table when no output file was given
  (c.out.empty() ? std::cerr : std::cout) << paoi_last_summary();
  return result.negative ? kExitInfeasible : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peak-AoI scheduling bounds, designers and experiments"};
  app.set_version_flag("--version", std::string(paoi_version()));
  app.require_subcommand(1);

  const std::map<std::string, std::pair<paoi_command, std::string>> commands{
      {"simulate", {PAOI_CMD_SIMULATE, "simulate the system and write per-update records"}},
      {"bound", {PAOI_CMD_BOUND, "evaluate both analytical bounds per source and threshold"}},
      {"design-l", {PAOI_CMD_DESIGN_L, "long-regime weight design"}},
      {"design-s", {PAOI_CMD_DESIGN_S, "short-regime weight design"}},
      {"opt-search", {PAOI_CMD_OPT_SEARCH, "brute-force group-weight search"}},
      {"region-sweep", {PAOI_CMD_REGION_SWEEP, "feasible region over eps_2"}},
      {"decay", {PAOI_CMD_DECAY, "violation probability versus n"}},
      {"validate", {PAOI_CMD_VALIDATE, "run the invariant suite"}},
  };

  std::map<std::string, Common> opts;
  for (const auto& [name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(name, cmd.second);
    Common& c = opts[name];
    auto* cfg = sub->add_option("--config", c.config, "experiment JSON")->check(CLI::ExistingFile);
    if (name != "validate") cfg->required();
    sub->add_option("--out", c.out, "output table (manifest written alongside)");
    sub->add_option("--seed", c.seed, "override the configured seed");
    sub->add_option("--samples", c.samples, "PAoI samples per source")->check(CLI::PositiveNumber);
    sub->add_option("--workers", c.workers, "parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--pmf", c.pmf, "Wallenius pmf evaluation")
        ->check(CLI::IsMember({"quadrature", "fog", "oracle"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const auto& [name, cmd] : commands) {
    if (!app.got_subcommand(name)) continue;
    return run(opts[name], cmd.first);
  }
  return kExitConfig;
}
