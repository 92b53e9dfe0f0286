#pragma once

#include "tlmix/loss.hpp"
#include "tlmix/prior.hpp"

namespace tlmix {

// Efficient mixture posterior updating: N prior-sampled particles moved by
// projected gradient steps and reweighted exponentially.
struct EmpuState {
  FamilySpec family;
  int N = 0, d = 0;
  std::vector<double> particles;  // N x d
  VecD weights;                   // nonnegative, sum 1
  double eta = 0.01;
  bool atomic_prior_warning = false;

  std::span<const double> particle(int i) const {
    return {particles.data() + size_t(i) * d, size_t(d)};
  }
  std::span<double> particle(int i) {
    return {particles.data() + size_t(i) * d, size_t(d)};
  }
};

// Source parameter estimate: Bernoulli sample mean (clamped away from the
// boundary when every label agrees), logistic regression MLE by deterministic
// batch gradient descent to gradient norm 1e-8 or 1e4 iterations.
VecD estimate_source_param(const FamilySpec& family, const Dataset& source,
                           bool* clamped = nullptr);

EmpuState empu_init(const PriorSpec& prior, const FamilySpec& family,
                    std::span<const double> theta_s_hat, int N, Rng& rng,
                    double eta = 0.01);

// One projected gradient step per particle followed by the exponential
// weight update on the post-step particle, then normalization.
void empu_step(EmpuState& state, const Observation& z, const LossSpec& loss,
               double eta);

double empu_predict_prob_one(const EmpuState& state, const VecD& x);
double empu_predict_log_density(const EmpuState& state, const Observation& z);
int empu_sample_particle(const EmpuState& state, Rng& rng);

}  // namespace tlmix
