#pragma once

#include <Eigen/Dense>

#include "tlmix/family.hpp"

namespace tlmix {

// Fisher blocks under the shared-parameter layout: the first j coordinates
// are common to source and target, the rest are task-specific. Delta_s and
// Delta_t are the Schur complements of the common block.
struct FisherBlocks {
  int d = 0, j = 0;
  Eigen::MatrixXd I_cs, I_ct;      // j x j
  Eigen::MatrixXd I_s, I_t;        // (d-j) x (d-j)
  Eigen::MatrixXd X_s, X_t;        // j x (d-j) cross blocks
  Eigen::MatrixXd Delta_s, Delta_t;
};

FisherBlocks fisher_blocks_from(const Eigen::MatrixXd& fisher_source,
                                const Eigen::MatrixXd& fisher_target, int j);
FisherBlocks fisher_blocks(const FamilySpec& family,
                           std::span<const double> theta_s_star,
                           std::span<const double> theta_t_star, int j);

struct AsymptoticEstimate {
  double log_n_coefficient = 0.0;  // multiplies log n
  double constant_term = 0.0;      // Fisher and 2*pi*e pieces
  double prior_term = 0.0;         // -log w(theta_t* | theta_s*)
  double source_correction = 0.0;  // (1/2) log det(I + (n/m) Dt Ds^-1)
  double total = 0.0;              // evaluated at the given n
  bool improper = false;           // prior density 0 at the truth
};

// Scalar online asymptote: (1/2) log(n / 2 pi e) + (1/2) log I_t - log w.
AsymptoticEstimate otl_asymptote_scalar(double n, double fisher_t,
                                        double prior_density_at_truth);

// General online asymptote:
//   (1/2) log det(n I_t) + (1/2) log det(I_j + (n/m) Dt Ds^-1)
//   + ((d-j)/2) log(1/(2 pi e)) - log w.
AsymptoticEstimate otl_asymptote_general(double n, double m,
                                         const FisherBlocks& blocks,
                                         double prior_density_at_truth);

// Leading-order rates with unit constants.
double otl_rate(int d, int j, double p, double n);
double itl_rate(int d, int j, double p, double n);

struct TvtlEpisodeTerm {
  double n = 0;
  int j = 0, c = 0;
  double prior_density = 1.0;
};
double tvtl_bound(std::span<const TvtlEpisodeTerm> episodes, int d, double p);

// Negative-transfer floor n * KL.
double negative_floor(double n, double kl);

}  // namespace tlmix
