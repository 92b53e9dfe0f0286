#include "tlmix/bounds.hpp"

#include <cmath>

namespace tlmix {

static constexpr double kLog2PiE = 2.837877066409345483560659;  // log(2*pi*e)

FisherBlocks fisher_blocks_from(const Eigen::MatrixXd& fisher_source,
                                const Eigen::MatrixXd& fisher_target, int j) {
  const int d = int(fisher_source.rows());
  if (fisher_target.rows() != d || j < 0 || j > d)
    throw std::invalid_argument("fisher_blocks: inconsistent (d, j)");
  FisherBlocks b;
  b.d = d;
  b.j = j;
  const int r = d - j;
  b.I_cs = fisher_source.topLeftCorner(j, j);
  b.I_ct = fisher_target.topLeftCorner(j, j);
  b.I_s = fisher_source.bottomRightCorner(r, r);
  b.I_t = fisher_target.bottomRightCorner(r, r);
  b.X_s = fisher_source.topRightCorner(j, r);
  b.X_t = fisher_target.topRightCorner(j, r);
  if (r > 0) {
    if (std::abs(b.I_s.determinant()) < 1e-300 ||
        std::abs(b.I_t.determinant()) < 1e-300)
      throw std::domain_error("Schur complement undefined: singular I_s or I_t");
    b.Delta_s = b.I_cs - b.X_s * b.I_s.inverse() * b.X_s.transpose();
    b.Delta_t = b.I_ct - b.X_t * b.I_t.inverse() * b.X_t.transpose();
  } else {
    b.Delta_s = b.I_cs;
    b.Delta_t = b.I_ct;
  }
  return b;
}

FisherBlocks fisher_blocks(const FamilySpec& family,
                           std::span<const double> theta_s_star,
                           std::span<const double> theta_t_star, int j) {
  return fisher_blocks_from(fisher_information(family, theta_s_star),
                            fisher_information(family, theta_t_star), j);
}

AsymptoticEstimate otl_asymptote_scalar(double n, double fisher_t,
                                        double prior_density_at_truth) {
  if (!(n >= 1) || !(fisher_t > 0))
    throw std::invalid_argument("otl_asymptote_scalar: need n >= 1, I_t > 0");
  AsymptoticEstimate e;
  if (!(prior_density_at_truth > 0.0)) {
    e.improper = true;  // improper prior at truth
    e.prior_term = kPosInf;
    e.total = kPosInf;
    return e;
  }
  e.log_n_coefficient = 0.5;
  e.constant_term = 0.5 * std::log(fisher_t) - 0.5 * kLog2PiE;
  e.prior_term = -std::log(prior_density_at_truth);
  e.total = e.log_n_coefficient * std::log(n) + e.constant_term + e.prior_term;
  return e;
}

AsymptoticEstimate otl_asymptote_general(double n, double m,
                                         const FisherBlocks& b,
                                         double prior_density_at_truth) {
  AsymptoticEstimate e;
  if (!(prior_density_at_truth > 0.0)) {
    e.improper = true;
    e.prior_term = kPosInf;
    e.total = kPosInf;
    return e;
  }
  const int r = b.d - b.j;
  e.log_n_coefficient = 0.5 * r;
  e.constant_term = -0.5 * r * kLog2PiE;
  if (r > 0) {
    double det_t = b.I_t.determinant();
    if (!(det_t > 0)) throw std::domain_error("singular I_t block");
    e.constant_term += 0.5 * std::log(det_t);
  }
  if (b.j > 0) {
    double det_s = b.Delta_s.determinant();
    if (!(std::abs(det_s) > 1e-300))
      throw std::domain_error("singular Delta_s");
    Eigen::MatrixXd corr =
        Eigen::MatrixXd::Identity(b.j, b.j) +
        (n / m) * b.Delta_t * b.Delta_s.inverse();
    e.source_correction = 0.5 * std::log(corr.determinant());
  }
  e.prior_term = -std::log(prior_density_at_truth);
  e.total = e.log_n_coefficient * std::log(n) + e.constant_term +
            e.prior_term + e.source_correction;
  return e;
}

double otl_rate(int d, int j, double p, double n) {
  if (p < 0) throw std::invalid_argument("otl_rate: p >= 0");
  // continuous unit-constant surrogate for the shared-parameter cost:
  // log(1 + n^{1-p}) is j(1-p) log n for p < 1, O(1) at p = 1, and
  // j / n^{p-1} for p > 1, and it decreases in p
  double common = j * std::log1p(std::pow(n, 1.0 - p));
  return common + (d - j) * std::log(n);
}

double itl_rate(int d, int j, double p, double n) {
  if (p < 0) throw std::invalid_argument("itl_rate: p >= 0");
  return (d - j) / n + j / std::max(n, std::pow(n, p));
}

double tvtl_bound(std::span<const TvtlEpisodeTerm> episodes, int d, double p) {
  const double l = double(episodes.size());
  double sum = 0.0;
  for (const auto& ep : episodes) {
    if (!(ep.prior_density > 0.0)) return kPosInf;  // improper flag
    double source_share =
        ep.j * std::min(1.0, std::pow(ep.n, 1.0 - p));
    double specific = (d - ep.c - ep.j) * std::log(ep.n);
    sum += ep.n * (source_share + ep.c + specific + 2.0 / ep.prior_density);
  }
  return std::sqrt(l * sum);
}

double negative_floor(double n, double kl) {
  if (kl < 0) throw std::invalid_argument("negative_floor: kl >= 0");
  return n * kl;
}

}  // namespace tlmix
