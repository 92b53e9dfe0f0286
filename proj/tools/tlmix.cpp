#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "tlmix/bernoulli_exact.hpp"
#include "tlmix/bounds.hpp"
#include "tlmix/harness.hpp"
#include "tlmix/selftest.hpp"

using namespace tlmix;

namespace {

ScenarioConfig resolve_scenario(const std::string& config_path,
                                const std::string& scenario_name) {
  if (!config_path.empty()) return load_config(config_path);
  const auto& cat = scenario_catalog();
  auto it = cat.find(scenario_name);
  if (it == cat.end())
    throw ConfigError("unknown scenario '" + scenario_name +
                      "'; see `tlmix list-scenarios`");
  return it->second;
}

int cmd_run(const std::string& config_path, const std::string& scenario_name,
            const std::string& out_path, int threads, long seed_override) {
  ScenarioConfig cfg = resolve_scenario(config_path, scenario_name);
  if (seed_override >= 0) cfg.base_seed = uint64_t(seed_override);
  auto results = run_scenario(cfg, threads);
  emit_csv(results, out_path);
  int aborted = 0;
  for (const auto& r : results) {
    aborted += r.aborted;
    std::fprintf(stderr, "%s/%s: %d trials ok, %d aborted, %.3fs/trial\n",
                 r.scenario.c_str(), r.algorithm.c_str(), r.completed,
                 r.aborted, r.mean_trial_seconds);
    for (const auto& d : r.diagnostics)
      std::fprintf(stderr, "  trial diagnostic: %s\n", d.c_str());
  }
  if (aborted) std::fprintf(stderr, "scenario completed partially\n");
  std::fprintf(stderr, "wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_bounds(const std::string& config_path,
               const std::string& scenario_name) {
  ScenarioConfig cfg = resolve_scenario(config_path, scenario_name);
  double density;
  if (cfg.prior.atomic())
    density = cfg.theta_t == cfg.theta_s ? kPosInf : 0.0;
  else
    density = conditional_density(cfg.prior, cfg.theta_t, cfg.theta_s);

  AsymptoticEstimate e;
  if (cfg.family.d == 1) {
    double it = fisher_information(cfg.family, cfg.theta_t)(0, 0);
    e = otl_asymptote_scalar(cfg.n, it, density);
  } else {
    FisherBlocks blocks =
        fisher_blocks(cfg.family, cfg.theta_s, cfg.theta_t, cfg.partition_j);
    double m_eff = cfg.saturated ? kPosInf : double(std::max(cfg.m, 1));
    e = otl_asymptote_general(cfg.n, m_eff, blocks, density);
  }
  std::printf("scenario:            %s\n", cfg.name.c_str());
  std::printf("n:                   %d\n", cfg.n);
  std::printf("log_n_coefficient:   %.12g\n", e.log_n_coefficient);
  std::printf("constant_term:       %.12g\n", e.constant_term);
  std::printf("prior_term:          %.12g\n", e.prior_term);
  std::printf("source_correction:   %.12g\n", e.source_correction);
  std::printf("total_at_n:          %.12g\n", e.total);
  if (e.improper) std::printf("flag:                improper prior at truth\n");
  return 0;
}

int cmd_bernoulli_exact(double theta_t, double theta_s, int n_max, int step,
                        const std::string& priors, double c,
                        const std::string& mode, int m) {
  bool saturated = mode == "saturated";
  if (!saturated && mode != "finite")
    throw ConfigError("--mode must be 'saturated' or 'finite'");
  std::printf("prior,n,regret_nats\n");
  auto emit_row = [](const std::string& p, int n, double v) {
    std::printf("%s,%d,%.17g\n", p.c_str(), n, v);
  };
  std::stringstream ss(priors);
  std::string tok;
  SourceMode sm = saturated ? SourceMode::Saturated : SourceMode::Finite;
  while (std::getline(ss, tok, ',')) {
    for (int n = step; n <= n_max; n += step) {
      if (tok == "sum")
        emit_row(tok, n,
                 exact_expected_regret(theta_t, theta_s, BernoulliPrior::Sum,
                                       n, sm, m));
      else if (tok == "delta")
        emit_row(tok, n,
                 exact_expected_regret(theta_t, theta_s, BernoulliPrior::Delta,
                                       n, sm, m));
      else if (tok == "box")
        emit_row(tok, n,
                 exact_expected_regret(theta_t, theta_s, BernoulliPrior::Box,
                                       n, sm, m, c));
      else if (tok == "uniform")
        emit_row(tok, n,
                 regret_without_source(theta_t, n, MarginalKind::UniformBox));
      else if (tok == "linear")
        emit_row(tok, n, regret_without_source(theta_t, n,
                                               MarginalKind::LinearPlusHalf));
      else
        throw ConfigError("unknown prior '" + tok +
                          "' (use sum,delta,box,uniform,linear)");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixture-strategy transfer learning experiments"};
  app.require_subcommand(1);

  std::string config_path, scenario_name, out_path = "results.csv";
  int threads = 0;
  long seed_override = -1;

  auto* run = app.add_subcommand("run", "run a scenario and write CSV");
  run->add_option("--config", config_path, "scenario config (JSON)");
  run->add_option("--scenario", scenario_name, "catalog scenario name");
  run->add_option("--out", out_path, "output CSV path")->required();
  run->add_option("--threads", threads, "worker threads (default: all)");
  run->add_option("--seed", seed_override, "override the base seed");

  auto* bounds = app.add_subcommand("bounds", "print the asymptote decomposition");
  bounds->add_option("--config", config_path, "scenario config (JSON)");
  bounds->add_option("--scenario", scenario_name, "catalog scenario name");

  double bt = 1.0 / 3.0, bs = 0.4, bc = 0.1;
  int bn = 500, bstep = 50, bm = 100;
  std::string bpriors = "sum,delta,uniform,linear", bmode = "saturated";
  auto* bex = app.add_subcommand("bernoulli-exact",
                                 "closed-form regret table (CSV on stdout)");
  bex->add_option("--theta-t", bt, "true target parameter");
  bex->add_option("--theta-s", bs, "true source parameter");
  bex->add_option("--n", bn, "largest n");
  bex->add_option("--step", bstep, "n stride");
  bex->add_option("--priors", bpriors, "comma list: sum,delta,box,uniform,linear");
  bex->add_option("--c", bc, "box half-width");
  bex->add_option("--mode", bmode, "saturated | finite");
  bex->add_option("--m", bm, "source count for finite mode");

  auto* ls = app.add_subcommand("list-scenarios", "print the scenario catalog");
  auto* st = app.add_subcommand("selftest", "run the oracle-equality suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n" << e.what() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      if (config_path.empty() && scenario_name.empty())
        throw ConfigError("run: give --config or --scenario");
      return cmd_run(config_path, scenario_name, out_path, threads,
                     seed_override);
    }
    if (bounds->parsed()) {
      if (config_path.empty() && scenario_name.empty())
        throw ConfigError("bounds: give --config or --scenario");
      return cmd_bounds(config_path, scenario_name);
    }
    if (bex->parsed())
      return cmd_bernoulli_exact(bt, bs, bn, bstep, bpriors, bc, bmode, bm);
    if (ls->parsed()) {
      for (const auto& [name, cfg] : scenario_catalog())
        std::printf("%s\n", name.c_str());
      return 0;
    }
    if (st->parsed()) {
      bool ok =
          run_selftest([](const std::string& line) { std::puts(line.c_str()); });
      return ok ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
