#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "tlmix/common.hpp"
#include "tlmix/rng.hpp"

namespace tlmix {

enum class FamilyKind { Bernoulli, Logistic };

// Closed axis-aligned parameter box.
struct Box {
  VecD lo, hi;

  int dim() const { return int(lo.size()); }
  bool contains(std::span<const double> p) const;
  bool strictly_inside(std::span<const double> p) const;
  double side(int i) const { return hi[i] - lo[i]; }
  double volume() const;
  void clamp(std::span<double> p) const;

  static Box unit(int d) { return Box{VecD(d, 0.0), VecD(d, 1.0)}; }
};

// Gaussian covariate model for logistic regression inputs: mean vector and
// diagonal covariance.
struct CovariateModel {
  VecD mean;
  VecD cov_diag;
};

struct FamilySpec {
  FamilyKind kind = FamilyKind::Bernoulli;
  int d = 1;
  Box box = Box::unit(1);
  CovariateModel covariates;  // logistic only

  // Logistic KL and Fisher have no closed form; they are estimated by seeded
  // Monte Carlo over the covariate model with this draw count.
  int mc_draws = 100000;
  uint64_t mc_seed = 0x5DEECE66DULL;

  static FamilySpec bernoulli(double lo = 0.0, double hi = 1.0);
  static FamilySpec logistic(VecD mean, VecD cov_diag);

  void validate() const;
};

// Bernoulli: y in {0,1}, x empty. Logistic: (x, y).
struct Observation {
  double y = 0.0;
  VecD x;
};

// Flat container for bulk data.
struct Dataset {
  int d = 0;  // covariate dimension; 0 for Bernoulli
  std::vector<double> xs;
  std::vector<uint8_t> ys;

  int size() const { return int(ys.size()); }
  std::span<const double> x(int i) const {
    return {xs.data() + size_t(i) * d, size_t(d)};
  }
  Observation obs(int i) const;
  void push(const Observation& z);
  long ones() const;
};

// log P_theta(z) in nats. Boundary theta with an impossible observation
// yields -inf (a distinguished value, never a throw) so that grid engines can
// zero out boundary atoms silently.
double log_density(const FamilySpec& f, std::span<const double> theta,
                   const Observation& z);

// Exact analytic gradient; theta must be strictly interior to the box.
VecD grad_log_density(const FamilySpec& f, std::span<const double> theta,
                      const Observation& z);

Observation sample_obs(const FamilySpec& f, std::span<const double> theta,
                       Rng& rng);
Observation sample_obs(const FamilySpec& f, std::span<const double> theta,
                       uint64_t seed);
Dataset sample_dataset(const FamilySpec& f, std::span<const double> theta,
                       int count, Rng& rng);

// KL(P_a || P_b) in nats. Bernoulli closed form; logistic via the family's
// seeded Monte Carlo over covariates. Support violation returns +inf.
double kl_divergence(const FamilySpec& f, std::span<const double> a,
                     std::span<const double> b);

Eigen::MatrixXd fisher_information(const FamilySpec& f,
                                   std::span<const double> theta);

}  // namespace tlmix
