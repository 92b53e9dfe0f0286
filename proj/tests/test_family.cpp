#include <doctest.h>

#include "tlmix/family.hpp"
#include "tlmix/rng.hpp"

using namespace tlmix;

TEST_CASE("bernoulli log density closed form") {
  auto f = FamilySpec::bernoulli();
  CHECK(log_density(f, VecD{0.5}, {1.0, {}}) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(log_density(f, VecD{1.0 / 3.0}, {0.0, {}}) ==
        doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("bernoulli boundary densities return -inf, never throw") {
  auto f = FamilySpec::bernoulli();
  CHECK(log_density(f, VecD{0.0}, {1.0, {}}) == kNegInf);
  CHECK(log_density(f, VecD{1.0}, {0.0, {}}) == kNegInf);
  CHECK(log_density(f, VecD{0.0}, {0.0, {}}) == 0.0);
  CHECK(log_density(f, VecD{1.0}, {1.0, {}}) == 0.0);
}

TEST_CASE("bernoulli mass sums to one") {
  auto f = FamilySpec::bernoulli();
  for (double p : {0.01, 0.25, 0.5, 1.0 / 3.0, 0.999}) {
    double s = std::exp(log_density(f, VecD{p}, {0.0, {}})) +
               std::exp(log_density(f, VecD{p}, {1.0, {}}));
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("logistic log density at the origin is log 1/2") {
  auto f = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  Observation z{1.0, {3.2, -1.7}};
  CHECK(log_density(f, VecD{0.0, 0.0}, z) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("gradients: hand values") {
  auto fb = FamilySpec::bernoulli();
  CHECK(grad_log_density(fb, VecD{0.5}, {1.0, {}})[0] == doctest::Approx(2.0));
  CHECK(grad_log_density(fb, VecD{1.0 / 3.0}, {0.0, {}})[0] ==
        doctest::Approx(-1.5).epsilon(1e-12));
  auto fl = FamilySpec::logistic({0.0, 0.0}, {1.0, 1.0});
  VecD g = grad_log_density(fl, VecD{0.0, 0.0}, {1.0, {1.0, 1.0}});
  CHECK(g[0] == doctest::Approx(0.5));  // (1 - sigma(0)) x
  CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("gradient and fisher at the box boundary throw") {
  auto f = FamilySpec::bernoulli();
  CHECK_THROWS_AS((void)grad_log_density(f, VecD{0.0}, {1.0, {}}),
                  std::domain_error);
  CHECK_THROWS_AS((void)fisher_information(f, VecD{1.0}), std::domain_error);
}

TEST_CASE("gradient matches central finite differences on random interiors") {
  Rng rng(42);
  auto fb = FamilySpec::bernoulli();
  auto fl = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    {
      VecD th{0.05 + 0.9 * rng.uniform()};
      Observation z{rng.uniform() < 0.5 ? 0.0 : 1.0, {}};
      double fd = (log_density(fb, VecD{th[0] + h}, z) -
                   log_density(fb, VecD{th[0] - h}, z)) /
                  (2 * h);
      double an = grad_log_density(fb, th, z)[0];
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
    {
      VecD th{0.05 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform()};
      Observation z = sample_obs(fl, VecD{0.3, 0.5}, rng);
      VecD an = grad_log_density(fl, th, z);
      for (int j = 0; j < 2; ++j) {
        VecD tp = th, tm = th;
        tp[j] += h;
        tm[j] -= h;
        double fd = (log_density(fl, tp, z) - log_density(fl, tm, z)) / (2 * h);
        CHECK(std::abs(fd - an[j]) <= 1e-5 * std::max(1.0, std::abs(an[j])));
      }
    }
  }
}

TEST_CASE("sampler: degenerate parameters and the law of large numbers") {
  auto f = FamilySpec::bernoulli();
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_obs(f, VecD{1.0}, rng).y == 1.0);
    CHECK(sample_obs(f, VecD{0.0}, rng).y == 0.0);
  }
  long ones = 0;
  const int big = 1000000;
  Rng rng2(99);
  for (int i = 0; i < big; ++i) ones += sample_obs(f, VecD{0.6}, rng2).y != 0.0;
  CHECK(std::abs(double(ones) / big - 0.6) < 0.002);
}

TEST_CASE("sampler is deterministic given the seed") {
  auto f = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  Observation a = sample_obs(f, VecD{0.3, 0.5}, uint64_t(123));
  Observation b = sample_obs(f, VecD{0.3, 0.5}, uint64_t(123));
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
}

TEST_CASE("bernoulli KL closed form") {
  auto f = FamilySpec::bernoulli();
  CHECK(kl_divergence(f, VecD{0.6}, VecD{0.8}) ==
        doctest::Approx(0.10464962875291).epsilon(1e-10));
  CHECK(kl_divergence(f, VecD{1.0 / 3.0}, VecD{0.4}) ==
        doctest::Approx(0.00946649150723).epsilon(1e-10));
  CHECK(kl_divergence(f, VecD{0.37}, VecD{0.37}) == 0.0);
  CHECK(kl_divergence(f, VecD{0.5}, VecD{1.0}) == kPosInf);
}

TEST_CASE("kl nonnegative, zero iff equal") {
  auto f = FamilySpec::bernoulli();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double a = 0.01 + 0.98 * rng.uniform(), b = 0.01 + 0.98 * rng.uniform();
    double kl = kl_divergence(f, VecD{a}, VecD{b});
    CHECK(kl >= 0.0);
    if (std::abs(a - b) > 1e-6) CHECK(kl > 1e-12);
  }
}

TEST_CASE("fisher information closed form and the KL-Hessian identity") {
  auto f = FamilySpec::bernoulli();
  CHECK(fisher_information(f, VecD{0.5})(0, 0) == doctest::Approx(4.0));
  CHECK(fisher_information(f, VecD{1.0 / 3.0})(0, 0) == doctest::Approx(4.5));
  const double h = 1e-4;
  for (double p : {0.2, 1.0 / 3.0, 0.5, 0.71}) {
    auto klp = [&](double q) { return kl_divergence(f, VecD{p}, VecD{q}); };
    double hess = (klp(p + h) - 2.0 * klp(p) + klp(p - h)) / (h * h);
    double fi = fisher_information(f, VecD{p})(0, 0);
    CHECK(std::abs(hess - fi) / fi <= 1e-3);
  }
}

TEST_CASE("logistic fisher at the origin is a quarter of E[xx^T]") {
  auto f = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  Eigen::MatrixXd fi = fisher_information(f, VecD{0.0, 0.0});
  Eigen::MatrixXd second(2, 2);  // mu mu^T + I
  second << 26.0, -25.0, -25.0, 26.0;
  Eigen::MatrixXd want = 0.25 * second;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(fi(i, j) - want(i, j)) <= 0.01 * std::abs(want(i, j)));
}

TEST_CASE("logistic KL is deterministic, positive off-diagonal, zero at equality") {
  auto f = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  f.mc_draws = 20000;
  double a = kl_divergence(f, VecD{0.3, 0.5}, VecD{0.2, 0.4});
  double b = kl_divergence(f, VecD{0.3, 0.5}, VecD{0.2, 0.4});
  CHECK(a == b);
  CHECK(a > 0.0);
  CHECK(kl_divergence(f, VecD{0.3, 0.5}, VecD{0.3, 0.5}) == 0.0);
}

TEST_CASE("family validation") {
  CHECK_THROWS_AS(FamilySpec::bernoulli(-0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(FamilySpec::logistic({1.0, 2.0}, {1.0, -1.0}), ConfigError);
}
