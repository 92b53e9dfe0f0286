#pragma once

#include <map>
#include <optional>

#include "tlmix/dpm.hpp"
#include "tlmix/grid.hpp"
#include "tlmix/homotl.hpp"

namespace tlmix {

enum class AlgoKind { Grid, SourceFree, Empu, Homotl, Dpm };

struct AlgoSpec {
  AlgoKind kind = AlgoKind::Grid;
  std::optional<int> N;        // empu particle count override
  std::optional<double> eta;   // empu / homotl step size override
  std::optional<double> beta;  // dpm balance override
  std::string name() const;    // CSV column, e.g. "empu[N=25]"
};

struct HyperParams {
  int N = 100;
  double eta = 0.01;
  double alpha = 0.01;
  double beta = 0.5;
  int K = 10;
  int sweeps = 20;
  int resolution = 0;  // 0 -> engine default
  int base_mc = 512;
  bool empu_sample_predict = false;  // sample-a-particle protocol vs mixture
  HomOtlVariant homotl_variant = HomOtlVariant::CrossEntropy;
  GaussianBase g0;  // dpm base; sized on load
};

struct ScenarioConfig {
  std::string name = "scenario";
  FamilySpec family = FamilySpec::bernoulli();
  PriorSpec prior;
  VecD theta_t, theta_s;
  int m = 0;
  bool saturated = false;  // source-saturated mode: condition on theta_s*
  int n = 0;
  LossSpec loss;
  std::vector<AlgoSpec> algorithms;
  int repeats = 1;
  uint64_t base_seed = 1;
  HyperParams hyper;
  bool bound_overlay = false;
  int partition_j = 0;
  std::vector<EpisodeSpec> episodes;

  // throws ConfigError listing every violation
  void validate() const;
  EngineConfig engine(bool source_free) const;
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text);

struct CurveSummary {
  std::string scenario;
  std::string algorithm;
  VecD mean_regret;   // mean cumulative regret per step
  VecD stderr_regret; // standard error of the cumulative regret
  VecD mean_mistakes; // mean cumulative mistakes per step
  VecD overlay;       // asymptote overlay (empty = column emitted as nan)
  int completed = 0;
  int aborted = 0;
  std::vector<std::string> diagnostics;
  double mean_trial_seconds = 0.0;
};

std::vector<CurveSummary> run_scenario(const ScenarioConfig& cfg, int threads);

// Per-trial entry points (seed = base_seed + trial_index).
OtlTrialResult run_trial(const ScenarioConfig& cfg, const AlgoSpec& algo,
                         uint64_t trial_seed,
                         const SourceClusters* dpm_source);

void emit_csv(const std::vector<CurveSummary>& results,
              const std::string& path);

int default_thread_count();  // TLMIX_THREADS overrides hardware concurrency

// Asymptotic-estimate overlay values per step for an algorithm arm.
VecD bound_overlay_curve(const ScenarioConfig& cfg, bool source_free);

const std::map<std::string, ScenarioConfig>& scenario_catalog();

}  // namespace tlmix
