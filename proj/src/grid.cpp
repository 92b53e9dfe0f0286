#include "tlmix/grid.hpp"

#include <chrono>
#include <cmath>

namespace tlmix {

VecD grid_axis_points(double lo, double hi, int res) {
  VecD p(res);
  for (int i = 0; i < res; ++i) p[i] = lo + (hi - lo) * (i + 0.5) / res;
  return p;
}

int default_resolution(const FamilySpec& family) {
  return family.d == 1 ? 201 : 61;
}

static std::string describe_support(const PriorSpec& prior) {
  switch (prior.conditional) {
    case ConditionalKind::UniformBox:
      return "independent uniform conditional over the parameter box";
    case ConditionalKind::SumLinear:
      return "sum-linear joint on [0,1]^2";
    case ConditionalKind::Delta:
      return "delta conditional (theta_t = theta_s)";
    case ConditionalKind::BoxConditional:
      return "box conditional, half-width c=" + std::to_string(prior.c);
    case ConditionalKind::GaussianConditional:
      return "gaussian conditional, std c=" + std::to_string(prior.c);
    case ConditionalKind::GridDensity:
      return "tabulated grid-density conditional";
  }
  return "prior";
}

void GridPosterior::normalize() {
  double lz = logsumexp(log_weights);
  if (!std::isfinite(lz))
    throw TrialAbort(
        "posterior collapsed: data impossible under prior support (" +
        support_note + ")");
  for (double& w : log_weights) w -= lz;
  normalized = true;
}

static void product_axes(const Box& box, int res, std::vector<VecD>& axes,
                         long& count) {
  axes.clear();
  count = 1;
  for (int i = 0; i < box.dim(); ++i) {
    axes.push_back(grid_axis_points(box.lo[i], box.hi[i], res));
    count *= res;
  }
}

static void decode_point(const std::vector<VecD>& axes, long idx, VecD& out) {
  for (int i = int(axes.size()) - 1; i >= 0; --i) {
    int r = int(axes[i].size());
    out[i] = axes[i][idx % r];
    idx /= r;
  }
}

GridPosterior build_grid(const PriorSpec& prior, const FamilySpec& family,
                         int resolution) {
  if (resolution <= 0) resolution = default_resolution(family);
  prior.validate();
  const Box& dom = prior.domain;
  const int d = dom.dim();
  GridPosterior g;
  g.family = family;
  g.support_note = describe_support(prior);

  std::vector<VecD> axes;
  long npts = 0;
  product_axes(dom, resolution, axes, npts);

  if (prior.atomic()) {
    g.dim_s = d;
    g.dim_t = 0;
    g.slaved = true;
    g.coords.resize(size_t(npts) * d);
    g.log_weights.resize(npts);
    VecD pt(d);
    for (long i = 0; i < npts; ++i) {
      decode_point(axes, i, pt);
      std::copy(pt.begin(), pt.end(), g.coords.begin() + size_t(i) * d);
      double w = marginal_density(prior, pt);
      g.log_weights[i] = w > 0.0 ? std::log(w) : kNegInf;
    }
  } else {
    g.dim_s = d;
    g.dim_t = d;
    g.product_layout = true;
    g.ns = int(npts);
    g.nt = int(npts);
    g.coords.resize(size_t(npts) * npts * 2 * d);
    g.log_weights.resize(size_t(npts) * npts);
    VecD ps(d), pt(d);
    for (long is = 0; is < npts; ++is) {
      decode_point(axes, is, ps);
      double ms = marginal_density(prior, ps);
      double lms = ms > 0.0 ? std::log(ms) : kNegInf;
      for (long it = 0; it < npts; ++it) {
        decode_point(axes, it, pt);
        size_t a = size_t(is) * npts + it;
        double* dst = g.coords.data() + a * 2 * d;
        std::copy(ps.begin(), ps.end(), dst);
        std::copy(pt.begin(), pt.end(), dst + d);
        double cw = conditional_density(prior, pt, ps);
        g.log_weights[a] =
            cw > 0.0 && std::isfinite(lms) ? lms + std::log(cw) : kNegInf;
      }
    }
  }
  bool any = false;
  for (double w : g.log_weights) any = any || std::isfinite(w);
  if (!any) throw ConfigError("degenerate prior: zero mass on the grid");
  g.normalize();
  return g;
}

static GridPosterior make_target_only(const FamilySpec& family, int resolution,
                                      std::string note) {
  GridPosterior g;
  g.family = family;
  g.dim_s = 0;
  g.dim_t = family.d;
  g.support_note = std::move(note);
  std::vector<VecD> axes;
  long npts = 0;
  product_axes(family.box, resolution, axes, npts);
  g.coords.resize(size_t(npts) * family.d);
  g.log_weights.assign(npts, 0.0);
  VecD pt(family.d);
  for (long i = 0; i < npts; ++i) {
    decode_point(axes, i, pt);
    std::copy(pt.begin(), pt.end(), g.coords.begin() + size_t(i) * family.d);
  }
  return g;
}

GridPosterior target_grid_at_source_atom(const PriorSpec& prior,
                                         const FamilySpec& family,
                                         std::span<const double> theta_s,
                                         int resolution) {
  if (resolution <= 0) resolution = default_resolution(family);
  if (prior.atomic()) {
    GridPosterior g;
    g.family = family;
    g.dim_s = 0;
    g.dim_t = family.d;
    g.support_note = describe_support(prior) + " at the source estimate";
    g.coords.assign(theta_s.begin(), theta_s.end());
    g.log_weights.assign(1, 0.0);
    g.normalized = true;
    return g;
  }
  GridPosterior g =
      make_target_only(family, resolution, describe_support(prior));
  for (int i = 0; i < g.natoms(); ++i) {
    double w = conditional_density(prior, g.target_coords(i), theta_s);
    g.log_weights[i] = w > 0.0 ? std::log(w) : kNegInf;
  }
  bool any = false;
  for (double w : g.log_weights) any = any || std::isfinite(w);
  if (!any) throw ConfigError("degenerate prior: zero mass on the grid");
  g.normalize();
  return g;
}

GridPosterior target_grid_marginal(const PriorSpec& prior,
                                   const FamilySpec& family, int resolution) {
  if (resolution <= 0) resolution = default_resolution(family);
  GridPosterior g = make_target_only(
      family, resolution, "source-free marginal prior over theta_t");
  for (int i = 0; i < g.natoms(); ++i) {
    double w = marginal_density(prior, g.target_coords(i));
    g.log_weights[i] = w > 0.0 ? std::log(w) : kNegInf;
  }
  g.normalize();
  return g;
}

static double source_loglik(const FamilySpec& family,
                            std::span<const double> theta, const Dataset& ds,
                            long ones) {
  if (ds.size() == 0) return 0.0;
  if (family.kind == FamilyKind::Bernoulli) {
    double p = theta[0];
    long k = ones, m = ds.size();
    double ll = 0.0;
    if (k > 0) ll += p > 0.0 ? k * std::log(p) : kNegInf;
    if (m - k > 0) ll += p < 1.0 ? (m - k) * std::log1p(-p) : kNegInf;
    return ll;
  }
  double ll = 0.0;
  const int d = family.d;
  for (int i = 0; i < ds.size(); ++i) {
    const double* x = ds.xs.data() + size_t(i) * d;
    double t = 0.0;
    for (int j = 0; j < d; ++j) t += theta[j] * x[j];
    ll += ds.ys[i] * t - log1pexp(t);
  }
  return ll;
}

void condition_on_source(GridPosterior& g, const Dataset& source) {
  if (source.size() == 0) return;
  if (g.dim_s == 0)
    throw std::logic_error("grid has no theta_s coordinates to condition on");
  long ones = source.ones();
  for (int i = 0; i < g.natoms(); ++i) {
    if (!std::isfinite(g.log_weights[i])) continue;
    g.log_weights[i] +=
        source_loglik(g.family, g.source_coords(i), source, ones);
  }
  g.normalize();
}

void update_target(GridPosterior& g, const Observation& z) {
  for (int i = 0; i < g.natoms(); ++i) {
    if (!std::isfinite(g.log_weights[i])) continue;
    g.log_weights[i] += log_density(g.family, g.target_coords(i), z);
  }
  g.normalize();
}

GridPosterior marginal_target(const GridPosterior& g) {
  if (g.slaved) {
    GridPosterior t = g;
    t.dim_s = 0;
    t.dim_t = g.dim_s;
    t.slaved = false;
    return t;
  }
  if (!g.product_layout)
    throw std::logic_error("marginal_target requires a product-layout grid");
  GridPosterior t;
  t.family = g.family;
  t.dim_s = 0;
  t.dim_t = g.dim_t;
  t.support_note = g.support_note + " (theta_t marginal)";
  t.coords.resize(size_t(g.nt) * g.dim_t);
  t.log_weights.assign(g.nt, kNegInf);
  VecD col(g.ns);
  for (int it = 0; it < g.nt; ++it) {
    auto tc = g.target_coords(it);
    std::copy(tc.begin(), tc.end(), t.coords.begin() + size_t(it) * g.dim_t);
    for (int is = 0; is < g.ns; ++is)
      col[is] = g.log_weights[size_t(is) * g.nt + it];
    t.log_weights[it] = logsumexp(col);
  }
  t.normalize();
  return t;
}

static bool separable_conditional(const PriorSpec& prior) {
  return prior.conditional == ConditionalKind::BoxConditional ||
         prior.conditional == ConditionalKind::GaussianConditional ||
         prior.conditional == ConditionalKind::UniformBox;
}

static double kernel1d(const PriorSpec& prior, int dim, double t, double s) {
  const Box& dom = prior.domain;
  switch (prior.conditional) {
    case ConditionalKind::UniformBox:
      return 1.0 / dom.side(dim);
    case ConditionalKind::BoxConditional: {
      double a = std::max(dom.lo[dim], s - prior.c);
      double b = std::min(dom.hi[dim], s + prior.c);
      return (t >= a && t <= b) ? 1.0 / (b - a) : 0.0;
    }
    case ConditionalKind::GaussianConditional: {
      double z = (t - s) / prior.c;
      double mass = norm_cdf((dom.hi[dim] - s) / prior.c) -
                    norm_cdf((dom.lo[dim] - s) / prior.c);
      return 0.398942280401432677939946 * std::exp(-0.5 * z * z) /
             (prior.c * mass);
    }
    default:
      throw std::logic_error("kernel1d: conditional is not product-form");
  }
}

GridPosterior target_prior_from_source(const PriorSpec& prior,
                                       const FamilySpec& family,
                                       const Dataset& source, int resolution) {
  if (resolution <= 0) resolution = default_resolution(family);
  const int d = family.d;

  if (prior.atomic()) {
    GridPosterior g = build_grid(prior, family, resolution);
    condition_on_source(g, source);
    return marginal_target(g);
  }

  // posterior over theta_s on its own grid
  GridPosterior src =
      make_target_only(family, resolution, describe_support(prior));
  src.dim_s = d;
  src.dim_t = 0;
  for (int i = 0; i < src.natoms(); ++i) {
    double w = marginal_density(prior, src.source_coords(i));
    src.log_weights[i] = w > 0.0 ? std::log(w) : kNegInf;
  }
  src.normalize();
  condition_on_source(src, source);

  VecD post(src.natoms());
  for (int i = 0; i < src.natoms(); ++i) post[i] = std::exp(src.log_weights[i]);

  GridPosterior tgt = make_target_only(
      family, resolution,
      describe_support(prior) + " mixed over the source posterior");

  if (separable_conditional(prior) && d == 2) {
    // w_t(t1,t2) = sum_{s1,s2} W(s1,s2) K1(t1,s1) K2(t2,s2), contracted one
    // dimension at a time; kernels are res x res matrices
    const int r = resolution;
    VecD ax0 = grid_axis_points(family.box.lo[0], family.box.hi[0], r);
    VecD ax1 = grid_axis_points(family.box.lo[1], family.box.hi[1], r);
    VecD k1(size_t(r) * r), k2(size_t(r) * r);
    for (int t = 0; t < r; ++t)
      for (int s = 0; s < r; ++s) {
        k1[size_t(t) * r + s] = kernel1d(prior, 0, ax0[t], ax0[s]);
        k2[size_t(t) * r + s] = kernel1d(prior, 1, ax1[t], ax1[s]);
      }
    VecD mid(size_t(r) * r, 0.0);  // A(s1,t2) = sum_s2 W(s1,s2) K2(t2,s2)
    for (int s1 = 0; s1 < r; ++s1)
      for (int t2 = 0; t2 < r; ++t2) {
        double acc = 0.0;
        for (int s2 = 0; s2 < r; ++s2)
          acc += post[size_t(s1) * r + s2] * k2[size_t(t2) * r + s2];
        mid[size_t(s1) * r + t2] = acc;
      }
    for (int t1 = 0; t1 < r; ++t1)
      for (int t2 = 0; t2 < r; ++t2) {
        double acc = 0.0;
        for (int s1 = 0; s1 < r; ++s1)
          acc += k1[size_t(t1) * r + s1] * mid[size_t(s1) * r + t2];
        tgt.log_weights[size_t(t1) * r + t2] =
            acc > 0.0 ? std::log(acc) : kNegInf;
      }
  } else {
    for (int it = 0; it < tgt.natoms(); ++it) {
      double acc = 0.0;
      for (int is = 0; is < src.natoms(); ++is) {
        if (post[is] == 0.0) continue;
        acc += post[is] * conditional_density(prior, tgt.target_coords(it),
                                              src.source_coords(is));
      }
      tgt.log_weights[it] = acc > 0.0 ? std::log(acc) : kNegInf;
    }
  }
  tgt.normalize();
  return tgt;
}

double predictive_log_density(const GridPosterior& g, const Observation& z) {
  VecD terms(g.natoms());
  for (int i = 0; i < g.natoms(); ++i) {
    double lw = g.log_weights[i];
    terms[i] = std::isfinite(lw)
                   ? lw + log_density(g.family, g.target_coords(i), z)
                   : kNegInf;
  }
  return logsumexp(terms);
}

double predictive_prob_one(const GridPosterior& g, const VecD& x) {
  double p = 0.0;
  for (int i = 0; i < g.natoms(); ++i) {
    double w = std::exp(g.log_weights[i]);
    if (w == 0.0) continue;
    auto th = g.target_coords(i);
    if (g.family.kind == FamilyKind::Bernoulli) {
      p += w * th[0];
    } else {
      double t = 0.0;
      for (int j = 0; j < g.family.d; ++j) t += th[j] * x[j];
      p += w * sigmoid(t);
    }
  }
  return p;
}

PredictorOutput predict_bounded(const GridPosterior& g, const LossSpec& loss,
                                std::span<const double> candidates,
                                const VecD& x) {
  if (candidates.empty()) throw ConfigError("empty candidate set");
  double p1 = predictive_prob_one(g, x);
  PredictorOutput best;
  for (size_t i = 0; i < candidates.size(); ++i) {
    double el = p1 * action_loss(loss, candidates[i], 1.0) +
                (1.0 - p1) * action_loss(loss, candidates[i], 0.0);
    if (best.index < 0 || el < best.expected_loss) {
      best.action = candidates[i];
      best.expected_loss = el;
      best.index = int(i);
    }
  }
  return best;
}

double optimal_log_loss(const FamilySpec& family,
                        std::span<const double> theta, const Observation& z) {
  return -log_density(family, theta, z);
}

double optimal_bounded_action(const FamilySpec& family, const LossSpec& loss,
                              std::span<const double> theta,
                              std::span<const double> candidates,
                              const VecD& x) {
  double p1;
  if (family.kind == FamilyKind::Bernoulli) {
    p1 = theta[0];
  } else {
    double t = 0.0;
    for (int j = 0; j < family.d; ++j) t += theta[j] * x[j];
    p1 = sigmoid(t);
  }
  double best = candidates[0], bl = kPosInf;
  for (double b : candidates) {
    double el =
        p1 * action_loss(loss, b, 1.0) + (1.0 - p1) * action_loss(loss, b, 0.0);
    if (el < bl) {
      bl = el;
      best = b;
    }
  }
  return best;
}

Dataset draw_target_stream(const FamilySpec& family,
                           std::span<const double> theta_t, int n,
                           uint64_t trial_seed) {
  Rng rng(substream(trial_seed, kStreamTargetData));
  return sample_dataset(family, theta_t, n, rng);
}

Dataset draw_source_data(const FamilySpec& family,
                         std::span<const double> theta_s, int m,
                         uint64_t trial_seed) {
  Rng rng(substream(trial_seed, kStreamSourceData));
  return sample_dataset(family, theta_s, m, rng);
}

// deterministic source MLE shared by the big-m fast path and EMPU
VecD source_mle(const FamilySpec& family, const Dataset& ds, bool* clamped) {
  if (family.kind == FamilyKind::Bernoulli) {
    double m = ds.size();
    double p = ds.ones() / m;
    double guard = 1.0 / (m + 2.0);
    double clamped_p = std::clamp(p, guard, 1.0 - guard);
    if (clamped) *clamped = clamped_p != p;
    return {clamped_p};
  }
  if (clamped) *clamped = false;
  const int d = family.d;
  VecD theta(d, 0.0), g(d), cand(d);
  auto negll = [&](const VecD& th) {
    double s = 0.0;
    for (int i = 0; i < ds.size(); ++i) {
      const double* x = ds.xs.data() + size_t(i) * d;
      double t = 0.0;
      for (int j = 0; j < d; ++j) t += th[j] * x[j];
      s += log1pexp(t) - ds.ys[i] * t;
    }
    return s / ds.size();
  };
  auto grad = [&](const VecD& th, VecD& out) {
    out.assign(d, 0.0);
    for (int i = 0; i < ds.size(); ++i) {
      const double* x = ds.xs.data() + size_t(i) * d;
      double t = 0.0;
      for (int j = 0; j < d; ++j) t += th[j] * x[j];
      double r = sigmoid(t) - ds.ys[i];
      for (int j = 0; j < d; ++j) out[j] += r * x[j];
    }
    for (double& v : out) v /= ds.size();
  };
  double f = negll(theta), step = 1.0;
  for (int it = 0; it < 10000; ++it) {
    grad(theta, g);
    double gn2 = 0.0;
    for (double v : g) gn2 += v * v;
    if (std::sqrt(gn2) <= 1e-8) break;
    step = std::min(step * 2.0, 64.0);
    for (;;) {
      for (int j = 0; j < d; ++j) cand[j] = theta[j] - step * g[j];
      double fc = negll(cand);
      if (fc <= f - 0.5 * step * gn2 || step < 1e-12) {
        theta = cand;
        f = fc;
        break;
      }
      step *= 0.5;
    }
  }
  return theta;
}

static GridPosterior otl_initial_grid(const EngineConfig& cfg,
                                      const Dataset* source) {
  if (cfg.source_free)
    return target_grid_marginal(cfg.prior, cfg.family, cfg.resolution);
  if (cfg.saturated)
    return target_grid_at_source_atom(cfg.prior, cfg.family, cfg.theta_s,
                                      cfg.resolution);
  if (cfg.m >= cfg.saturate_threshold) {
    VecD mle = source_mle(cfg.family, *source, nullptr);
    return target_grid_at_source_atom(cfg.prior, cfg.family, mle,
                                      cfg.resolution);
  }
  return target_prior_from_source(cfg.prior, cfg.family, *source,
                                  cfg.resolution);
}

static VecD default_candidates(const LossSpec& loss) {
  if (loss.kind == LossKind::Squared) {
    VecD c(101);
    for (int i = 0; i <= 100; ++i) c[i] = i / 100.0;
    return c;
  }
  return {0.0, 1.0};
}

OtlTrialResult run_otl_grid(const EngineConfig& cfg, uint64_t trial_seed) {
  auto t0 = std::chrono::steady_clock::now();
  OtlTrialResult res;
  try {
    Dataset source;
    if (!cfg.source_free && !cfg.saturated && cfg.m > 0)
      source = draw_source_data(cfg.family, cfg.theta_s, cfg.m, trial_seed);
    Dataset target =
        draw_target_stream(cfg.family, cfg.theta_t, cfg.n, trial_seed);
    GridPosterior grid = otl_initial_grid(cfg, &source);

    const bool log_loss = cfg.loss.is_log();
    const VecD candidates = default_candidates(cfg.loss);
    double mistake_count = 0.0;
    for (int k = 0; k < cfg.n; ++k) {
      Observation z = target.obs(k);
      double p1 = predictive_prob_one(grid, z.x);
      double inst;
      if (log_loss) {
        double lq = predictive_log_density(grid, z);
        if (!std::isfinite(lq))
          throw TrialAbort(
              "infinite instantaneous regret: predictive density 0 at the "
              "observed point (prior support: " +
              grid.support_note + ")");
        inst = -lq - optimal_log_loss(cfg.family, cfg.theta_t, z);
      } else {
        PredictorOutput out = predict_bounded(grid, cfg.loss, candidates, z.x);
        double bstar = optimal_bounded_action(cfg.family, cfg.loss,
                                              cfg.theta_t, candidates, z.x);
        inst = action_loss(cfg.loss, out.action, z.y) -
               action_loss(cfg.loss, bstar, z.y);
      }
      if ((p1 > 0.5 ? 1.0 : 0.0) != z.y) mistake_count += 1.0;
      res.instantaneous.push_back(inst);
      res.cumulative.push_back(
          (res.cumulative.empty() ? 0.0 : res.cumulative.back()) + inst);
      res.mistakes.push_back(mistake_count);
      update_target(grid, z);
    }
  } catch (const TrialAbort& e) {
    res.aborted = true;
    res.diagnostic = e.what();
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

double run_itl_grid(const EngineConfig& cfg, uint64_t trial_seed,
                    int holdout_draws) {
  Dataset source;
  if (!cfg.source_free && !cfg.saturated && cfg.m > 0)
    source = draw_source_data(cfg.family, cfg.theta_s, cfg.m, trial_seed);
  Dataset target =
      draw_target_stream(cfg.family, cfg.theta_t, cfg.n, trial_seed);
  GridPosterior grid = otl_initial_grid(cfg, &source);
  for (int k = 0; k < cfg.n; ++k) update_target(grid, target.obs(k));

  Rng rng(substream(trial_seed, kStreamHoldout));
  KahanSum acc;
  for (int h = 0; h < holdout_draws; ++h) {
    Observation z = sample_obs(cfg.family, cfg.theta_t, rng);
    acc.add(log_density(cfg.family, cfg.theta_t, z) -
            predictive_log_density(grid, z));
  }
  return acc.value() / holdout_draws;
}

std::vector<OtlTrialResult> run_tvtl_grid(const EngineConfig& cfg,
                                          uint64_t trial_seed) {
  if (cfg.family.d != 1)
    throw ConfigError("the TVTL grid engine supports d = 1 families");
  if (cfg.episodes.empty()) return {};
  for (const auto& ep : cfg.episodes)
    if (ep.j + ep.c_common > cfg.family.d)
      throw ConfigError("tvtl partition blocks overlap");

  const TvtlConditional tc_default = cfg.prior.tvtl.value_or(
      TvtlConditional{0, 1, ConditionalKind::BoxConditional, 0.05});
  const Box& dom = cfg.prior.domain;
  const int res = cfg.resolution > 0 ? cfg.resolution : 101;
  const VecD axis = grid_axis_points(dom.lo[0], dom.hi[0], res);

  // theta_s representation: saturated mode keeps the exact value so that a
  // single episode reduces bit-for-bit to run_otl_grid
  VecD s_vals, s_post;
  if (cfg.saturated || cfg.m == 0) {
    s_vals = {cfg.theta_s.empty() ? 0.5 : cfg.theta_s[0]};
    s_post = {1.0};
  } else {
    Dataset source =
        draw_source_data(cfg.family, cfg.theta_s, cfg.m, trial_seed);
    long ones = source.ones();
    VecD lw(res);
    for (int i = 0; i < res; ++i) {
      VecD s = {axis[i]};
      double mw = marginal_density(cfg.prior, s);
      lw[i] = (mw > 0.0 ? std::log(mw) : kNegInf) +
              source_loglik(cfg.family, s, source, ones);
    }
    double lz = logsumexp(lw);
    s_vals = axis;
    s_post.resize(res);
    for (int i = 0; i < res; ++i) s_post[i] = std::exp(lw[i] - lz);
  }
  const int ns = int(s_vals.size());

  Rng data_rng(substream(trial_seed, kStreamTargetData));
  std::vector<OtlTrialResult> out;
  VecD joint;  // ns x res over (theta_s, previous theta_t)

  auto episode_conditional = [&](const EpisodeSpec& ep, double t, double prev,
                                 double s) {
    TvtlConditional tc = tc_default;
    tc.j = ep.j;
    tc.c_common = ep.c_common;
    VecD tv = {t}, pv = {prev}, sv = {s};
    return tvtl_conditional_density(tc, dom, tv, pv, sv);
  };

  for (size_t ei = 0; ei < cfg.episodes.size(); ++ei) {
    const EpisodeSpec& ep = cfg.episodes[ei];
    GridPosterior grid = make_target_only(
        cfg.family, res,
        ei == 0 ? describe_support(cfg.prior) : "tvtl episode conditional");

    if (ei == 0) {
      // first episode: plain OTL conditional (theta_t0 is arbitrary)
      for (int it = 0; it < res; ++it) {
        double acc = 0.0;
        VecD t = {axis[it]};
        for (int is = 0; is < ns; ++is) {
          VecD s = {s_vals[is]};
          if (cfg.prior.atomic()) {
            acc += s_post[is] * (std::abs(s_vals[is] - axis[it]) < 1e-15
                                     ? double(res)
                                     : 0.0);
          } else {
            acc += s_post[is] * conditional_density(cfg.prior, t, s);
          }
        }
        grid.log_weights[it] = acc > 0.0 ? std::log(acc) : kNegInf;
      }
    } else {
      for (int it = 0; it < res; ++it) {
        double acc = 0.0;
        for (int is = 0; is < ns; ++is)
          for (int ip = 0; ip < res; ++ip) {
            double w = joint[size_t(is) * res + ip];
            if (w == 0.0) continue;
            acc += w * episode_conditional(ep, axis[it], axis[ip], s_vals[is]);
          }
        grid.log_weights[it] = acc > 0.0 ? std::log(acc) : kNegInf;
      }
    }
    grid.normalize();

    OtlTrialResult r;
    Dataset epdata = sample_dataset(cfg.family, ep.theta, ep.n, data_rng);
    VecD ep_loglik(res, 0.0);
    double mistakes = 0.0;
    try {
      for (int k = 0; k < ep.n; ++k) {
        Observation z = epdata.obs(k);
        double lq = predictive_log_density(grid, z);
        if (!std::isfinite(lq))
          throw TrialAbort("infinite instantaneous regret in episode " +
                           std::to_string(ei + 1) + " (prior support: " +
                           grid.support_note + ")");
        double inst = -lq + log_density(cfg.family, ep.theta, z);
        double p1 = predictive_prob_one(grid, z.x);
        if ((p1 > 0.5 ? 1.0 : 0.0) != z.y) mistakes += 1.0;
        r.instantaneous.push_back(inst);
        r.cumulative.push_back(
            (r.cumulative.empty() ? 0.0 : r.cumulative.back()) + inst);
        r.mistakes.push_back(mistakes);
        update_target(grid, z);
        for (int it = 0; it < res; ++it) {
          VecD th = {axis[it]};
          ep_loglik[it] += log_density(cfg.family, th, z);
        }
      }
    } catch (const TrialAbort& e) {
      r.aborted = true;
      r.diagnostic = e.what();
    }
    bool aborted = r.aborted;
    out.push_back(std::move(r));
    if (aborted || ei + 1 == cfg.episodes.size()) {
      if (aborted) break;
      continue;
    }

    // carry the (theta_s, theta_ti) joint; likelihood shifted by its max
    double shift = kNegInf;
    for (double v : ep_loglik) shift = std::max(shift, v);
    VecD next(size_t(ns) * res, 0.0);
    double tot = 0.0;
    for (int is = 0; is < ns; ++is)
      for (int it = 0; it < res; ++it) {
        double prior_w;
        if (ei == 0) {
          VecD s = {s_vals[is]}, t = {axis[it]};
          prior_w = cfg.prior.atomic()
                        ? s_post[is] * (std::abs(s_vals[is] - axis[it]) < 1e-15
                                            ? double(res)
                                            : 0.0)
                        : s_post[is] * conditional_density(cfg.prior, t, s);
        } else {
          double acc = 0.0;
          for (int ip = 0; ip < res; ++ip) {
            double w = joint[size_t(is) * res + ip];
            if (w == 0.0) continue;
            acc += w * episode_conditional(ep, axis[it], axis[ip], s_vals[is]);
          }
          prior_w = acc;
        }
        double v = prior_w * std::exp(ep_loglik[it] - shift);
        next[size_t(is) * res + it] = v;
        tot += v;
      }
    if (!(tot > 0.0)) {
      OtlTrialResult bad;
      bad.aborted = true;
      bad.diagnostic = "tvtl joint posterior collapsed after episode " +
                       std::to_string(ei + 1);
      out.push_back(std::move(bad));
      break;
    }
    for (double& v : next) v /= tot;
    joint = std::move(next);
  }
  return out;
}

}  // namespace tlmix
