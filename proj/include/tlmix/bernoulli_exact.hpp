#pragma once

#include "tlmix/common.hpp"
#include "tlmix/prior.hpp"

namespace tlmix {

// Counts are a sufficient statistic for every Bernoulli mixture here: all
// probabilities below are of one specific sequence with the given counts.
struct CountSummary {
  int n = 0;    // target sample count
  int k_t = 0;  // target ones
  int m = 0;    // source sample count
  int k_s = 0;  // source ones
};

enum class BernoulliPrior { Sum, Delta, Box };

enum class SourceMode {
  Finite,     // sum over k_s with Binomial(m, theta_s*) weights
  Saturated,  // condition on theta_s = theta_s* exactly (the m -> infinity device)
};

// Joint prior w(s,t) = s + t on [0,1]^2.
double mixture_sum_prior(const CountSummary& c);

// w(t|s) = delta(s), w(s) = 1 on [0,1].
double mixture_delta_prior(const CountSummary& c);

// w(t|s_hat) uniform on [s_hat - c, s_hat + c]; the box must lie strictly
// inside (0,1) (clipped boxes route to the grid engine instead).
double mixture_box_prior(int n, int k_t, double theta_s_hat, double c);
double log_mixture_box_prior(int n, int k_t, double theta_s_hat, double c);

// log of the sum/delta mixtures in saturated mode (theta_s known exactly).
double log_mixture_sum_prior_saturated(int n, int k_t, double theta_s);
double log_mixture_delta_prior_saturated(int n, int k_t, double theta_s);

// Expected OTL regret under log loss, enumerated exactly over count
// outcomes: sum over counts of Binomial weights times log(P/Q).
double exact_expected_regret(double theta_t_star, double theta_s_star,
                             BernoulliPrior prior, int n, SourceMode mode,
                             int m = 0, double box_c = 0.0);

// Expected regret of the source-free mixture with the given marginal.
double regret_without_source(double theta_t_star, int n, MarginalKind marginal);

// Source-free sequence mixtures (for the chain-rule and oracle tests).
double log_mixture_marginal(int n, int k_t, bool linear_plus_half);

}  // namespace tlmix
