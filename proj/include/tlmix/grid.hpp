#pragma once

#include <string>

#include "tlmix/loss.hpp"
#include "tlmix/prior.hpp"

namespace tlmix {

// Weighted discretization of a parameter posterior in log space. Atoms sit at
// the midpoints of a regular grid over the parameter box and never move;
// conditioning only changes log_weights. Layout of each atom's coordinates is
// [theta_s | theta_t]; a delta-prior grid stores theta_s only with theta_t
// slaved to it.
struct GridPosterior {
  FamilySpec family;
  int dim_s = 0, dim_t = 0;
  bool slaved = false;
  bool product_layout = false;  // atom index = i_s * nt + i_t
  int ns = 1, nt = 1;
  std::vector<double> coords;
  VecD log_weights;
  bool normalized = false;
  std::string support_note;  // named in collapse diagnostics

  int natoms() const { return int(log_weights.size()); }
  int stride() const { return dim_s + dim_t; }
  std::span<const double> source_coords(int i) const {
    return {coords.data() + size_t(i) * stride(), size_t(dim_s)};
  }
  std::span<const double> target_coords(int i) const {
    if (slaved || dim_t == 0)
      return {coords.data() + size_t(i) * stride(), size_t(dim_s)};
    return {coords.data() + size_t(i) * stride() + dim_s, size_t(dim_t)};
  }
  void normalize();  // throws TrialAbort when every weight is -inf
};

VecD grid_axis_points(double lo, double hi, int res);

// Joint (theta_s, theta_t) grid weighted by the prior; a Delta conditional
// yields a theta_s-only grid with theta_t slaved.
GridPosterior build_grid(const PriorSpec& prior, const FamilySpec& family,
                         int resolution);

// theta_t-only grid weighted by the conditional prior at a known theta_s
// (the source-saturated path).
GridPosterior target_grid_at_source_atom(const PriorSpec& prior,
                                         const FamilySpec& family,
                                         std::span<const double> theta_s,
                                         int resolution);

// theta_t-only grid weighted by the prior's marginal kind (the source-free
// mixture over hat-w(theta_t)).
GridPosterior target_grid_marginal(const PriorSpec& prior,
                                   const FamilySpec& family, int resolution);

// Full finite-m path: condition a theta_s grid on the source data, then mix
// through the conditional prior into a theta_t grid. Product-form
// conditionals (Box / Gaussian / independent) contract one dimension at a
// time; other kinds use the dense kernel (d = 1).
GridPosterior target_prior_from_source(const PriorSpec& prior,
                                       const FamilySpec& family,
                                       const Dataset& source,
                                       int resolution);

void condition_on_source(GridPosterior& g, const Dataset& source);
void update_target(GridPosterior& g, const Observation& z);
GridPosterior marginal_target(const GridPosterior& g);

double predictive_log_density(const GridPosterior& g, const Observation& z);
// P(y = 1 | x) under the posterior predictive; x ignored for Bernoulli.
double predictive_prob_one(const GridPosterior& g, const VecD& x);

struct PredictorOutput {
  double action = 0.0;
  double expected_loss = 0.0;
  int index = -1;
};
PredictorOutput predict_bounded(const GridPosterior& g, const LossSpec& loss,
                                std::span<const double> candidates,
                                const VecD& x);

// --- scenario runners -------------------------------------------------------

struct EpisodeSpec {
  VecD theta;        // true parameter for this episode
  int n = 0;         // samples in the episode
  int j = 0;         // source-sharing coordinates
  int c_common = 0;  // target-common coordinates
};

struct EngineConfig {
  FamilySpec family;
  PriorSpec prior;
  VecD theta_t, theta_s;
  int m = 0;
  bool saturated = false;   // condition on theta_s* exactly, no source draws
  bool source_free = false; // ignore the source, use the marginal prior
  int n = 0;
  LossSpec loss;
  int resolution = 0;             // 0 -> dimension defaults (201 / 61)
  long saturate_threshold = 50000;
  std::vector<EpisodeSpec> episodes;  // TVTL only
};

int default_resolution(const FamilySpec& family);

struct OtlTrialResult {
  VecD instantaneous;  // per-step realized regret (nats or loss difference)
  VecD cumulative;
  VecD mistakes;  // cumulative mistake count per step
  bool aborted = false;
  std::string diagnostic;
  double seconds = 0.0;
};

OtlTrialResult run_otl_grid(const EngineConfig& cfg, uint64_t trial_seed);
double run_itl_grid(const EngineConfig& cfg, uint64_t trial_seed,
                    int holdout_draws);
std::vector<OtlTrialResult> run_tvtl_grid(const EngineConfig& cfg,
                                          uint64_t trial_seed);

// Draw the target stream for one trial (shared across algorithm arms).
Dataset draw_target_stream(const FamilySpec& family,
                           std::span<const double> theta_t, int n,
                           uint64_t trial_seed);
Dataset draw_source_data(const FamilySpec& family,
                         std::span<const double> theta_s, int m,
                         uint64_t trial_seed);

// True-parameter comparator predictions used in realized regret.
double optimal_log_loss(const FamilySpec& family, std::span<const double> theta,
                        const Observation& z);
double optimal_bounded_action(const FamilySpec& family, const LossSpec& loss,
                              std::span<const double> theta,
                              std::span<const double> candidates, const VecD& x);

}  // namespace tlmix
