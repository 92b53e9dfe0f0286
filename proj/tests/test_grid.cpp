#include <doctest.h>

#include <cmath>

#include "tlmix/bernoulli_exact.hpp"
#include "tlmix/grid.hpp"

using namespace tlmix;

namespace {

GridPosterior single_atom_grid(double theta) {
  GridPosterior g;
  g.family = FamilySpec::bernoulli();
  g.dim_s = 0;
  g.dim_t = 1;
  g.coords = {theta};
  g.log_weights = {0.0};
  g.normalized = true;
  g.support_note = "test atom";
  return g;
}

double target_mean(const GridPosterior& g) {
  double m = 0.0;
  for (int i = 0; i < g.natoms(); ++i)
    m += std::exp(g.log_weights[i]) * g.target_coords(i)[0];
  return m;
}

double target_var(const GridPosterior& g) {
  double m = target_mean(g), v = 0.0;
  for (int i = 0; i < g.natoms(); ++i) {
    double d = g.target_coords(i)[0] - m;
    v += std::exp(g.log_weights[i]) * d * d;
  }
  return v;
}

}  // namespace

TEST_CASE("build_grid: uniform prior gives equal weights") {
  auto prior = PriorSpec::independent_uniform(Box::unit(1));
  auto g = build_grid(prior, FamilySpec::bernoulli(), 101);
  CHECK(g.natoms() == 101 * 101);
  for (double w : g.log_weights)
    CHECK(w == doctest::Approx(g.log_weights[0]).epsilon(1e-12));
  CHECK(logsumexp(g.log_weights) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("build_grid: sum-linear marginal matches theta_s + 1/2 on the grid") {
  auto prior = PriorSpec::sum_linear();
  auto g = build_grid(prior, FamilySpec::bernoulli(), 51);
  // sum over theta_t for each theta_s; compare against the marginal density
  // normalized over the grid
  VecD axis = grid_axis_points(0.0, 1.0, 51);
  for (int is = 0; is < 51; ++is) {
    double mass = 0.0;
    for (int it = 0; it < 51; ++it)
      mass += std::exp(g.log_weights[size_t(is) * 51 + it]);
    double want = (axis[is] + 0.5) / 51.0;  // Riemann cell mass
    CHECK(std::abs(mass - want) <= 1e-2);
  }
}

TEST_CASE("single-point grid predicts its atom exactly") {
  auto g = single_atom_grid(0.5);
  CHECK(std::exp(predictive_log_density(g, {1.0, {}})) == doctest::Approx(0.5));
}

TEST_CASE("degenerate prior is rejected at build time") {
  // box conditional much narrower than one grid cell cannot hit any atom pair
  auto prior = PriorSpec::box_conditional(1e-4, Box::unit(1));
  // at resolution 11 the (s, t) cells are 0.09 wide: conditional density is
  // zero at every atom pair off the diagonal, and the diagonal atoms have
  // |s - t| = 0 < c, so this one still builds; shrink further with an offset
  // domain so no pair lands inside the box
  auto g = build_grid(prior, FamilySpec::bernoulli(), 11);
  CHECK(g.natoms() > 0);  // diagonal atoms carry the mass
  // a conditional with support between atoms: delta-like box on a shifted
  // lattice cannot be produced by construction, so degeneracy is exercised
  // through the saturated path instead
  CHECK_THROWS_AS((void)target_grid_at_source_atom(
                      PriorSpec::box_conditional(1e-4, Box::unit(1)),
                      FamilySpec::bernoulli(), VecD{0.52}, 11),
                  ConfigError);
}

TEST_CASE("condition_on_source: empty data leaves the grid unchanged") {
  auto prior = PriorSpec::independent_uniform(Box::unit(1));
  auto g = build_grid(prior, FamilySpec::bernoulli(), 21);
  auto before = g.log_weights;
  condition_on_source(g, Dataset{});
  CHECK(g.log_weights == before);
}

TEST_CASE("condition_on_source: one positive draw gives the Laplace posterior") {
  auto prior = PriorSpec::independent_uniform(Box::unit(1));
  auto g = build_grid(prior, FamilySpec::bernoulli(), 101);
  Dataset ds;
  ds.push({1.0, {}});
  condition_on_source(g, ds);
  auto marg_s = [&](int is) {
    double m = 0.0;
    for (int it = 0; it < 101; ++it)
      m += std::exp(g.log_weights[size_t(is) * 101 + it]);
    return m;
  };
  VecD axis = grid_axis_points(0.0, 1.0, 101);
  for (int is = 0; is < 101; ++is) {
    double want = 2.0 * axis[is] / 101.0;  // Beta(2,1) cell mass
    CHECK(std::abs(marg_s(is) - want) <= 1e-3);
  }
}

TEST_CASE("condition_on_source: source mean concentrates at truth") {
  auto prior = PriorSpec::independent_uniform(Box::unit(1));
  GridPosterior g = build_grid(PriorSpec::delta_on_uniform(Box::unit(1)),
                               FamilySpec::bernoulli(), 201);
  Dataset ds =
      draw_source_data(FamilySpec::bernoulli(), VecD{0.35}, 100000, 12345);
  condition_on_source(g, ds);
  double mean = 0.0;
  for (int i = 0; i < g.natoms(); ++i)
    mean += std::exp(g.log_weights[i]) * g.source_coords(i)[0];
  CHECK(std::abs(mean - 0.35) < 0.005);
}

TEST_CASE("update_target: impossible observation collapses with a diagnostic") {
  auto g = single_atom_grid(1.0);
  CHECK_THROWS_AS(update_target(g, {0.0, {}}), TrialAbort);
}

TEST_CASE("sequential updates equal one batch conditioning") {
  auto prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  auto seq = target_grid_at_source_atom(prior, FamilySpec::bernoulli(),
                                        VecD{0.35}, 201);
  auto batch = seq;
  Dataset ds = draw_target_stream(FamilySpec::bernoulli(), VecD{1.0 / 3.0}, 25,
                                  999);
  for (int i = 0; i < ds.size(); ++i) update_target(seq, ds.obs(i));
  // batch: add the whole log likelihood in one shot
  long ones = ds.ones();
  for (int i = 0; i < batch.natoms(); ++i) {
    double p = batch.target_coords(i)[0];
    batch.log_weights[i] +=
        ones * std::log(p) + (ds.size() - ones) * std::log1p(-p);
  }
  batch.normalize();
  REQUIRE(seq.natoms() == batch.natoms());
  for (int i = 0; i < seq.natoms(); ++i) {
    bool both_zero = seq.log_weights[i] == kNegInf &&
                     batch.log_weights[i] == kNegInf;
    if (!both_zero)
      CHECK(std::abs(seq.log_weights[i] - batch.log_weights[i]) <= 1e-10);
  }
}

TEST_CASE("normalization invariant after every update") {
  auto prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  auto g = target_grid_at_source_atom(prior, FamilySpec::bernoulli(),
                                      VecD{0.35}, 201);
  Dataset ds =
      draw_target_stream(FamilySpec::bernoulli(), VecD{1.0 / 3.0}, 50, 77);
  for (int i = 0; i < ds.size(); ++i) {
    update_target(g, ds.obs(i));
    CHECK(std::abs(logsumexp(g.log_weights)) <= 1e-10);
  }
}

TEST_CASE("predictive masses sum to one at every step") {
  auto prior = PriorSpec::sum_linear();
  auto g = target_grid_at_source_atom(prior, FamilySpec::bernoulli(),
                                      VecD{0.4}, 201);
  Dataset ds =
      draw_target_stream(FamilySpec::bernoulli(), VecD{1.0 / 3.0}, 40, 3);
  for (int i = 0; i < ds.size(); ++i) {
    double p1 = std::exp(predictive_log_density(g, {1.0, {}}));
    double p0 = std::exp(predictive_log_density(g, {0.0, {}}));
    CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-12));
    update_target(g, ds.obs(i));
  }
}

TEST_CASE("two-atom symmetric predictive") {
  GridPosterior g;
  g.family = FamilySpec::bernoulli();
  g.dim_s = 0;
  g.dim_t = 1;
  g.coords = {0.25, 0.75};
  g.log_weights = {std::log(0.5), std::log(0.5)};
  g.normalized = true;
  CHECK(std::exp(predictive_log_density(g, {1.0, {}})) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Laplace rule from the uniform grid prior") {
  auto prior = PriorSpec::independent_uniform(Box::unit(1));
  auto g = target_grid_marginal(prior, FamilySpec::bernoulli(), 0);
  update_target(g, {1.0, {}});
  CHECK(std::exp(predictive_log_density(g, {1.0, {}})) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("predict_bounded: bayes action, mean action, tie break") {
  auto g = single_atom_grid(0.7);
  LossSpec zo{LossKind::ZeroOne, 1.0};
  VecD acts{0.0, 1.0};
  CHECK(predict_bounded(g, zo, acts, {}).action == 1.0);

  auto g4 = single_atom_grid(0.4);
  LossSpec sq{LossKind::Squared, 1.0};
  VecD fine(101);
  for (int i = 0; i <= 100; ++i) fine[i] = i / 100.0;
  CHECK(predict_bounded(g4, sq, fine, {}).action == doctest::Approx(0.4));

  auto g5 = single_atom_grid(0.5);
  auto out = predict_bounded(g5, zo, acts, {});
  CHECK(out.action == 0.0);  // tie broken by lowest index
  CHECK(out.index == 0);
  CHECK_THROWS_AS((void)predict_bounded(g5, zo, VecD{}, {}), ConfigError);
}

TEST_CASE("cumulative log-loss regret telescopes to the batch mixture") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::sum_linear();
  cfg.theta_t = {1.0 / 3.0};
  cfg.theta_s = {0.4};
  cfg.saturated = true;
  cfg.n = 60;
  cfg.resolution = 201;
  auto res = run_otl_grid(cfg, 2024);
  REQUIRE(!res.aborted);

  // recompute the two batch quantities on the same data
  Dataset ds = draw_target_stream(cfg.family, cfg.theta_t, cfg.n, 2024);
  auto g = target_grid_at_source_atom(cfg.prior, cfg.family, cfg.theta_s, 201);
  long ones = ds.ones();
  double batch_logq = kNegInf;
  {
    VecD terms(g.natoms());
    for (int i = 0; i < g.natoms(); ++i) {
      double p = g.target_coords(i)[0];
      terms[i] = g.log_weights[i] + ones * std::log(p) +
                 (ds.size() - ones) * std::log1p(-p);
    }
    batch_logq = logsumexp(terms);
  }
  double logp = ones * std::log(cfg.theta_t[0]) +
                (ds.size() - ones) * std::log1p(-cfg.theta_t[0]);
  CHECK(std::abs(res.cumulative.back() - (logp - batch_logq)) <= 1e-9);
}

TEST_CASE("improper support stays at zero weight under any data") {
  auto prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  // box [0.7, 0.9] excludes theta_t* = 0.6
  auto g = target_grid_at_source_atom(prior, FamilySpec::bernoulli(),
                                      VecD{0.8}, 201);
  Dataset ds =
      draw_target_stream(FamilySpec::bernoulli(), VecD{0.6}, 120, 555);
  for (int i = 0; i < ds.size(); ++i) {
    update_target(g, ds.obs(i));
    for (int a = 0; a < g.natoms(); ++a) {
      double th = g.target_coords(a)[0];
      if (std::abs(th - 0.6) < 0.05)
        CHECK(g.log_weights[a] == kNegInf);
    }
  }
}

TEST_CASE("posterior with source is more concentrated than without") {
  auto withp = target_grid_at_source_atom(
      PriorSpec::box_conditional(0.1, Box::unit(1)), FamilySpec::bernoulli(),
      VecD{0.35}, 201);
  auto nop = target_grid_marginal(PriorSpec::independent_uniform(Box::unit(1)),
                                  FamilySpec::bernoulli(), 201);
  Dataset ds =
      draw_target_stream(FamilySpec::bernoulli(), VecD{1.0 / 3.0}, 150, 42);
  for (int i = 0; i < ds.size(); ++i) {
    update_target(withp, ds.obs(i));
    update_target(nop, ds.obs(i));
  }
  CHECK(target_var(withp) < target_var(nop));
}

TEST_CASE("grid refinement deltas shrink (Richardson-style sanity)") {
  Dataset ds =
      draw_target_stream(FamilySpec::bernoulli(), VecD{1.0 / 3.0}, 20, 8);
  auto pred_at = [&](int res) {
    auto g = target_grid_at_source_atom(
        PriorSpec::box_conditional(0.1, Box::unit(1)), FamilySpec::bernoulli(),
        VecD{0.35}, res);
    for (int i = 0; i < ds.size(); ++i) update_target(g, ds.obs(i));
    return predictive_log_density(g, {1.0, {}});
  };
  double p51 = pred_at(51), p101 = pred_at(101), p201 = pred_at(201),
         p401 = pred_at(401);
  CHECK(std::abs(p401 - p201) <= std::abs(p201 - p101));
  CHECK(std::abs(p201 - p101) <= std::abs(p101 - p51));
}

TEST_CASE("run_otl: n = 0 gives an empty curve") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::sum_linear();
  cfg.theta_t = {0.4};
  cfg.theta_s = {0.5};
  cfg.saturated = true;
  cfg.n = 0;
  auto res = run_otl_grid(cfg, 1);
  CHECK(res.cumulative.empty());
  CHECK(!res.aborted);
}

TEST_CASE("run_otl mean regret tracks the exact enumeration (light version)") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::sum_linear();
  cfg.theta_t = {1.0 / 3.0};
  cfg.theta_s = {0.4};
  cfg.saturated = true;
  cfg.n = 60;
  const int reps = 400;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < reps; ++t) {
    auto r = run_otl_grid(cfg, 5000 + t);
    REQUIRE(!r.aborted);
    sum += r.cumulative.back();
    sumsq += r.cumulative.back() * r.cumulative.back();
  }
  double mean = sum / reps;
  double sd = std::sqrt((sumsq - reps * mean * mean) / (reps - 1));
  double se = sd / std::sqrt(double(reps));
  double exact = exact_expected_regret(cfg.theta_t[0], cfg.theta_s[0],
                                       BernoulliPrior::Sum, cfg.n,
                                       SourceMode::Saturated);
  CHECK(std::abs(mean - exact) <= 4.0 * se);
}

TEST_CASE("run_itl: atom at the truth has zero excess risk") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::delta_on_uniform(Box::unit(1));
  cfg.theta_t = {0.45};
  cfg.theta_s = {0.45};  // delta conditional at the known source = truth
  cfg.saturated = true;
  cfg.n = 10;
  CHECK(run_itl_grid(cfg, 3, 2000) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("run_itl: proper prior reaches the 1/n band at n = 1e4") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  cfg.theta_t = {1.0 / 3.0};
  cfg.theta_s = {0.35};
  cfg.saturated = true;
  cfg.n = 10000;
  cfg.resolution = 401;  // posterior sd ~ 0.005 at n = 1e4
  double excess = run_itl_grid(cfg, 11, 200000);
  CHECK(excess < 2.0 / cfg.n);
  CHECK(excess > -2.0 / cfg.n);
}

TEST_CASE("run_itl: improper box floors at the KL to the nearest endpoint") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  cfg.theta_t = {0.6};
  cfg.theta_s = {0.8};  // support [0.7, 0.9]; nearest endpoint 0.7
  cfg.saturated = true;
  cfg.n = 10000;
  cfg.resolution = 401;
  double excess = run_itl_grid(cfg, 13, 50000);
  double kl_floor =
      kl_divergence(cfg.family, cfg.theta_t, VecD{0.7});
  CHECK(excess >= 0.9 * kl_floor);
}

TEST_CASE("tvtl: one episode reduces to run_otl") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  cfg.theta_t = {1.0 / 3.0};
  cfg.theta_s = {0.35};
  cfg.saturated = true;
  cfg.n = 40;
  cfg.resolution = 101;
  cfg.episodes = {{{1.0 / 3.0}, 40, 0, 0}};
  auto tv = run_tvtl_grid(cfg, 321);
  REQUIRE(tv.size() == 1);
  auto otl = run_otl_grid(cfg, 321);
  REQUIRE(tv[0].cumulative.size() == otl.cumulative.size());
  for (size_t i = 0; i < otl.cumulative.size(); ++i)
    CHECK(tv[0].cumulative[i] ==
          doctest::Approx(otl.cumulative[i]).epsilon(1e-12));
}

TEST_CASE("tvtl: empty episode contributes nothing") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::box_conditional(0.1, Box::unit(1));
  cfg.theta_t = {1.0 / 3.0};
  cfg.theta_s = {0.35};
  cfg.saturated = true;
  cfg.resolution = 61;
  cfg.episodes = {{{1.0 / 3.0}, 30, 0, 0}, {{1.0 / 3.0}, 0, 0, 1}};
  auto tv = run_tvtl_grid(cfg, 5);
  REQUIRE(tv.size() == 2);
  CHECK(tv[1].cumulative.empty());
}

TEST_CASE("tvtl: a carried-over posterior helps a repeated target") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::independent_uniform(Box::unit(1));
  cfg.prior.tvtl = TvtlConditional{0, 1, ConditionalKind::BoxConditional, 0.05};
  cfg.theta_t = {0.42};
  cfg.theta_s = {0.42};
  cfg.saturated = true;
  cfg.resolution = 101;
  cfg.episodes = {{{0.42}, 60, 0, 0}, {{0.42}, 60, 0, 1}};
  double ep1 = 0.0, ep2 = 0.0;
  const int reps = 200;
  for (int t = 0; t < reps; ++t) {
    auto tv = run_tvtl_grid(cfg, 9000 + t);
    REQUIRE(tv.size() == 2);
    REQUIRE(!tv[0].aborted);
    REQUIRE(!tv[1].aborted);
    ep1 += tv[0].cumulative.back();
    ep2 += tv[1].cumulative.back();
  }
  CHECK(ep2 / reps <= ep1 / reps);
}

TEST_CASE("tvtl: overlapping partition is rejected") {
  EngineConfig cfg;
  cfg.family = FamilySpec::bernoulli();
  cfg.prior = PriorSpec::independent_uniform(Box::unit(1));
  cfg.theta_t = {0.4};
  cfg.theta_s = {0.4};
  cfg.saturated = true;
  cfg.episodes = {{{0.4}, 10, 1, 1}};  // j + c = 2 > d = 1
  CHECK_THROWS_AS((void)run_tvtl_grid(cfg, 1), ConfigError);
}
