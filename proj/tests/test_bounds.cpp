#include <doctest.h>

#include <cmath>

#include "tlmix/bernoulli_exact.hpp"
#include "tlmix/bounds.hpp"
#include "tlmix/rng.hpp"

using namespace tlmix;

namespace {

Eigen::MatrixXd random_spd(int d, Rng& rng) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace

TEST_CASE("fisher blocks: j = 0 and j = d degenerate layouts") {
  Rng rng(1);
  auto fs = random_spd(3, rng), ft = random_spd(3, rng);
  auto b0 = fisher_blocks_from(fs, ft, 0);
  CHECK(b0.Delta_s.rows() == 0);
  CHECK(b0.I_t.rows() == 3);
  auto bd = fisher_blocks_from(fs, ft, 3);
  CHECK(bd.I_t.rows() == 0);
  CHECK(bd.Delta_s.rows() == 3);
  // full sharing: Delta equals the whole matrix
  CHECK((bd.Delta_s - fs).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK((bd.Delta_t - ft).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("fisher blocks: two independent bernoulli coordinates by hand") {
  double a = 0.3, b = 0.6, c = 0.45, d = 0.25;
  Eigen::MatrixXd fs = Eigen::MatrixXd::Zero(2, 2);
  fs(0, 0) = 1.0 / (a * (1 - a));
  fs(1, 1) = 1.0 / (b * (1 - b));
  Eigen::MatrixXd ft = Eigen::MatrixXd::Zero(2, 2);
  ft(0, 0) = 1.0 / (c * (1 - c));
  ft(1, 1) = 1.0 / (d * (1 - d));
  auto blocks = fisher_blocks_from(fs, ft, 1);
  CHECK(blocks.Delta_s(0, 0) == doctest::Approx(1.0 / (a * (1 - a))));
  CHECK(blocks.Delta_t(0, 0) == doctest::Approx(1.0 / (c * (1 - c))));
  CHECK(blocks.I_s(0, 0) == doctest::Approx(1.0 / (b * (1 - b))));
  CHECK(blocks.I_t(0, 0) == doctest::Approx(1.0 / (d * (1 - d))));
}

TEST_CASE("fisher blocks: schur complements recomputable and PSD") {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    int d = 2 + int(rng.uniform() * 3);
    int j = int(rng.uniform() * (d + 1));
    auto fs = random_spd(d, rng), ft = random_spd(d, rng);
    auto b = fisher_blocks_from(fs, ft, j);
    if (j > 0 && j < d) {
      Eigen::MatrixXd rs =
          b.I_cs - b.X_s * b.I_s.inverse() * b.X_s.transpose();
      CHECK((rs - b.Delta_s).norm() <= 1e-10);
    }
    if (j > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.Delta_s);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);   // Schur of SPD is PSD
    }
  }
}

TEST_CASE("block determinant identity on random SPD matrices") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    int d = 2 + int(rng.uniform() * 3);
    int j = 1 + int(rng.uniform() * (d - 1));
    double n = 10.0 + 500.0 * rng.uniform();
    double m = 10.0 + 5000.0 * rng.uniform();
    auto fs = random_spd(d, rng), ft = random_spd(d, rng);
    auto b = fisher_blocks_from(fs, ft, j);
    const int r = d - j;

    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(d + r, d + r);
    big.topLeftCorner(j, j) = m * b.I_cs + n * b.I_ct;
    big.block(0, j, j, r) = m * b.X_s;
    big.block(0, j + r, j, r) = n * b.X_t;
    big.block(j, 0, r, j) = m * b.X_s.transpose();
    big.block(j, j, r, r) = m * b.I_s;
    big.block(j + r, 0, r, j) = n * b.X_t.transpose();
    big.block(j + r, j + r, r, r) = n * b.I_t;

    Eigen::MatrixXd small = m * fs;

    double lhs = std::log(big.determinant()) - std::log(small.determinant());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(j, j) +
                           (n / m) * b.Delta_t * b.Delta_s.inverse();
    double rhs = std::log(corr.determinant()) +
                 std::log((n * b.I_t).determinant());
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("scalar asymptote: direct arithmetic of the formula") {
  // (1/2) log(500 / 2 pi e) + (1/2) log 4.5 - log 5
  auto e = otl_asymptote_scalar(500, 4.5, 5.0);
  double want = 0.5 * std::log(500.0 / (2 * M_PI * std::exp(1.0))) +
                0.5 * std::log(4.5) - std::log(5.0);
  CHECK(e.total == doctest::Approx(want).epsilon(1e-12));
  CHECK(e.total == doctest::Approx(0.83096571).epsilon(1e-6));
  CHECK(e.total == doctest::Approx(e.log_n_coefficient * std::log(500.0) +
                                   e.constant_term + e.prior_term +
                                   e.source_correction)
                       .epsilon(1e-12));
}

TEST_CASE("scalar asymptote: cancellation at n = 2 pi e, improper flag") {
  double n = 2 * M_PI * std::exp(1.0);
  auto e = otl_asymptote_scalar(n, 4.5, 1.0);
  CHECK(e.total == doctest::Approx(0.5 * std::log(4.5)).epsilon(1e-12));
  auto imp = otl_asymptote_scalar(100, 4.5, 0.0);
  CHECK(imp.improper);
  CHECK(imp.total == kPosInf);
}

TEST_CASE("scalar asymptote: the prior-density ratio is the whole difference") {
  double wa = 5.0, wb = 0.8333333;
  auto ea = otl_asymptote_scalar(1000, 4.5, wa);
  auto eb = otl_asymptote_scalar(1000, 4.5, wb);
  CHECK(ea.total - eb.total == doctest::Approx(std::log(wb / wa)).epsilon(1e-12));
}

TEST_CASE("general asymptote: reductions") {
  Rng rng(4);
  // d = 1, j = 0 embeds the scalar formula
  for (int rep = 0; rep < 100; ++rep) {
    double it = 0.5 + 10.0 * rng.uniform();
    double w = 0.1 + 5.0 * rng.uniform();
    double n = 10 + 2000 * rng.uniform();
    Eigen::MatrixXd f1(1, 1), f2(1, 1);
    f1(0, 0) = 1.0 + rng.uniform();
    f2(0, 0) = it;
    auto blocks = fisher_blocks_from(f1, f2, 0);
    auto gen = otl_asymptote_general(n, 777.0, blocks, w);
    auto sca = otl_asymptote_scalar(n, it, w);
    CHECK(std::abs(gen.total - sca.total) <= 1e-12);
  }
  // j = 0: no source correction
  auto fs = random_spd(2, rng), ft = random_spd(2, rng);
  auto b0 = fisher_blocks_from(fs, ft, 0);
  CHECK(otl_asymptote_general(100, 50, b0, 1.0).source_correction == 0.0);
  // j = d: the log det(n I_t) term is absent
  auto bd = fisher_blocks_from(fs, ft, 2);
  auto ed = otl_asymptote_general(100, 50, bd, 1.0);
  CHECK(ed.log_n_coefficient == 0.0);
  CHECK(ed.constant_term == 0.0);
}

TEST_CASE("rate formulas: spec values and reductions") {
  CHECK(otl_rate(2, 1, 2.0, 100) ==
        doctest::Approx(std::log1p(0.01) + std::log(100.0)).epsilon(1e-12));
  CHECK(otl_rate(2, 1, 2.0, 100) == doctest::Approx(4.615).epsilon(1e-3));
  CHECK(otl_rate(3, 0, 0.7, 50) == doctest::Approx(3 * std::log(50.0)));
  // p = 1: the shared-parameter cost is an O(j) constant, flat in n
  for (double n : {10.0, 100.0, 10000.0})
    CHECK(otl_rate(2, 1, 1.0, n) - std::log(n) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK(itl_rate(1, 0, 3.0, 50) == doctest::Approx(1.0 / 50));
  CHECK(itl_rate(2, 2, 2.0, 10) == doctest::Approx(2.0 / 100));
  CHECK(itl_rate(3, 1, 0.5, 100) == doctest::Approx(0.03));
}

TEST_CASE("otl_rate is non-increasing in p at fixed (d, j, n)") {
  for (int d = 1; d <= 4; ++d)
    for (int j = 0; j <= d; ++j)
      for (double n : {3.0, 10.0, 100.0, 1000.0}) {
        double prev = kPosInf;
        for (double p = 0.0; p <= 3.0; p += 0.1) {
          double r = otl_rate(d, j, p, n);
          CHECK(r <= prev + 1e-12);
          prev = r;
        }
      }
}

TEST_CASE("itl_rate: equals d/n at j = 0 and never exceeds it for p >= 1") {
  for (int d = 1; d <= 4; ++d)
    for (double n : {2.0, 10.0, 500.0}) {
      CHECK(itl_rate(d, 0, 1.7, n) == doctest::Approx(d / n));
      for (int j = 0; j <= d; ++j)
        for (double p : {1.0, 1.5, 2.0, 3.0})
          CHECK(itl_rate(d, j, p, n) <= d / n + 1e-15);
    }
}

TEST_CASE("tvtl bound: reduction, monotonicity, and a frozen hand value") {
  {
    TvtlEpisodeTerm ep{100.0, 0, 0, 1.0};
    double want = std::sqrt(100.0 * (3 * std::log(100.0) + 2.0));
    CHECK(tvtl_bound(std::vector{ep}, 3, 1.0) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  {
    std::vector<TvtlEpisodeTerm> eps = {{100, 1, 1, 0.5}, {200, 0, 2, 0.25}};
    double lo = tvtl_bound(eps, 4, 1.0);
    for (auto& e : eps) e.prior_density *= 2.0;
    CHECK(tvtl_bound(eps, 4, 1.0) < lo);
  }
  {
    // l = 2, n = (100, 100), d = 3, j = 1, c = 1, p = 1, w = 1:
    // each episode contributes 100 (1 + 1 + log 100 + 2)
    std::vector<TvtlEpisodeTerm> eps = {{100, 1, 1, 1.0}, {100, 1, 1, 1.0}};
    double inner = 100.0 * (1.0 + 1.0 + std::log(100.0) + 2.0);
    double want = std::sqrt(2.0 * 2.0 * inner);
    CHECK(tvtl_bound(eps, 3, 1.0) == doctest::Approx(want).epsilon(1e-12));
    CHECK(tvtl_bound(eps, 3, 1.0) == doctest::Approx(58.6691407334).epsilon(1e-9));
  }
  {
    std::vector<TvtlEpisodeTerm> eps = {{100, 1, 1, 0.0}};
    CHECK(tvtl_bound(eps, 3, 1.0) == kPosInf);
  }
}

TEST_CASE("negative floor") {
  CHECK(negative_floor(50, 0.0) == 0.0);
  CHECK(negative_floor(100, 0.10464962875291) ==
        doctest::Approx(10.464962875291).epsilon(1e-12));
  // the delta-prior saturated enumeration sits exactly on the floor
  double r = exact_expected_regret(0.6, 0.8, BernoulliPrior::Delta, 100,
                                   SourceMode::Saturated);
  auto f = FamilySpec::bernoulli();
  CHECK(std::abs(r - negative_floor(100, kl_divergence(f, VecD{0.6}, VecD{0.8}))) <=
        1e-10);
}

TEST_CASE("singular blocks raise") {
  Eigen::MatrixXd fs = Eigen::MatrixXd::Zero(2, 2);
  fs(0, 0) = 1.0;  // I_s block is singular
  Eigen::MatrixXd ft = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS((void)fisher_blocks_from(fs, ft, 1), std::domain_error);
}
