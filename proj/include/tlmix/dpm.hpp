#pragma once

#include <map>

#include "tlmix/family.hpp"

namespace tlmix {

// Base distribution over parameter vectors: per-coordinate Gaussian truncated
// to the family box.
struct GaussianBase {
  VecD mean;
  VecD scale;
  static GaussianBase standard(int d) {
    return GaussianBase{VecD(d, 0.0), VecD(d, 1.0)};
  }
};

struct DpmOptions {
  double alpha = 0.01;
  double beta = 0.5;  // balance: source empirical measure vs base
  GaussianBase g0;
  int sweeps = 20;
  int K = 10;        // predictive sample count
  int base_mc = 512; // Monte Carlo draws for the non-conjugate base integral
};

// Source atoms collapsed to unique values with counts.
struct SourceClusters {
  std::vector<VecD> values;
  std::vector<int> counts;
  int total = 0;
};

std::vector<VecD> dpm_fit_source(const FamilySpec& family, const Dataset& source,
                                 double alpha, const GaussianBase& g0,
                                 int sweeps, uint64_t seed, int base_mc = 512);
SourceClusters collapse_atoms(const std::vector<VecD>& atoms);

struct DpmState {
  FamilySpec family;
  DpmOptions opt;
  SourceClusters source;  // immutable after construction
  Dataset data;           // target history (full, per the online variant here)
  std::vector<VecD> atoms;
  std::map<VecD, int> unique_counts;

  // per-trial base draws, fixed once; per-datum cached likelihood under each
  // draw and the resulting base marginal (1/B) sum_b P_{g0_b}(z_i)
  std::vector<VecD> g0_draws;
  std::vector<VecD> base_lik;
  std::vector<VecD> base_loglik;
  VecD base_marg;
};

DpmState dpm_init(const FamilySpec& family, SourceClusters source,
                  const DpmOptions& opt, uint64_t trial_seed);

// Normalized conditional weights for datum i (exclude_index >= 0) or a fresh
// datum (exclude_index = -1, z supplied).
struct DpmWeights {
  std::vector<VecD> target_values;
  VecD q_target;  // per unique target value (count-collapsed)
  VecD q_source;  // per source cluster
  double r = 0.0; // fresh-from-base mass
};
DpmWeights dpm_conditional_weights(const DpmState& s, int exclude_index,
                                   const Observation& z);

// Receive one observation: append it, draw its atom, then run opt.sweeps
// Gibbs sweeps over the whole history.
void dpm_observe(DpmState& s, const Observation& z, Rng& rng);
void dpm_gibbs_sweep(DpmState& s, Rng& rng);

// Predictive before seeing the outcome: K atoms sampled from the prior
// conditional, averaged (the 1/K factor makes the output a probability).
struct DpmPrediction {
  double log_density = 0.0;
  double prob_one = 0.0;
};
DpmPrediction dpm_predict(const DpmState& s, const Observation& z, int K,
                          Rng& rng);

}  // namespace tlmix
