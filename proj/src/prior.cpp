#include "tlmix/prior.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tlmix {

GridDensityTable GridDensityTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("grid density file not readable: " + path);
  GridDensityTable t;
  in >> t.lo >> t.hi >> t.res_s >> t.res_t;
  if (!in || t.res_s < 1 || t.res_t < 1 || !(t.hi > t.lo))
    throw ConfigError("grid density file has a malformed header: " + path);
  t.values.resize(size_t(t.res_s) * t.res_t);
  for (double& v : t.values) in >> v;
  if (!in) throw ConfigError("grid density file truncated: " + path);
  t.validate();
  return t;
}

void GridDensityTable::validate() const {
  double cell = (hi - lo) / res_t;
  for (int r = 0; r < res_s; ++r) {
    double mass = 0.0;
    for (int k = 0; k < res_t; ++k) {
      double v = values[size_t(r) * res_t + k];
      if (v < 0.0) throw ConfigError("grid density has a negative entry");
      mass += v * cell;
    }
    if (std::abs(mass - 1.0) > 1e-6)
      throw ConfigError("grid density row " + std::to_string(r) +
                        " integrates to " + std::to_string(mass) +
                        ", expected 1");
  }
}

double GridDensityTable::at(double theta_t, double theta_s) const {
  auto bin = [&](double v, int res) {
    int i = int((v - lo) / (hi - lo) * res);
    return std::clamp(i, 0, res - 1);
  };
  return values[size_t(bin(theta_s, res_s)) * res_t + bin(theta_t, res_t)];
}

void PriorSpec::validate() const {
  switch (conditional) {
    case ConditionalKind::SumLinear:
      if (domain.dim() != 1 || domain.lo[0] != 0.0 || domain.hi[0] != 1.0)
        throw ConfigError("SumLinear prior is defined on [0,1]^2 only");
      if (marginal != MarginalKind::LinearPlusHalf)
        throw ConfigError("SumLinear joint implies the LinearPlusHalf marginal");
      break;
    case ConditionalKind::BoxConditional:
    case ConditionalKind::GaussianConditional:
      if (!(c > 0.0)) throw ConfigError("conditional width c must be > 0");
      break;
    case ConditionalKind::GridDensity:
      if (domain.dim() != 1)
        throw ConfigError("GridDensity conditionals support d = 1 only");
      table.validate();
      break;
    default:
      break;
  }
  if (marginal == MarginalKind::LinearPlusHalf &&
      (domain.dim() != 1 || domain.lo[0] != 0.0 || domain.hi[0] != 1.0))
    throw ConfigError("LinearPlusHalf marginal is defined on [0,1] only");
  if (tvtl && tvtl->j + tvtl->c_common > domain.dim())
    throw ConfigError(
        "tvtl partition blocks overlap: j + c exceeds parameter dimension");
}

PriorSpec PriorSpec::sum_linear() {
  PriorSpec p;
  p.marginal = MarginalKind::LinearPlusHalf;
  p.conditional = ConditionalKind::SumLinear;
  p.domain = Box::unit(1);
  return p;
}

PriorSpec PriorSpec::delta_on_uniform(Box domain) {
  PriorSpec p;
  p.conditional = ConditionalKind::Delta;
  p.domain = std::move(domain);
  return p;
}

PriorSpec PriorSpec::box_conditional(double c, Box domain, MarginalKind marg) {
  PriorSpec p;
  p.marginal = marg;
  p.conditional = ConditionalKind::BoxConditional;
  p.c = c;
  p.domain = std::move(domain);
  return p;
}

PriorSpec PriorSpec::gaussian_conditional(double c, Box domain,
                                          MarginalKind marg) {
  PriorSpec p;
  p.marginal = marg;
  p.conditional = ConditionalKind::GaussianConditional;
  p.c = c;
  p.domain = std::move(domain);
  return p;
}

PriorSpec PriorSpec::independent_uniform(Box domain) {
  PriorSpec p;
  p.domain = std::move(domain);
  return p;
}

static double clipped_box_low(const Box& dom, int i, double s, double c) {
  return std::max(dom.lo[i], s - c);
}
static double clipped_box_high(const Box& dom, int i, double s, double c) {
  return std::min(dom.hi[i], s + c);
}

double conditional_density(const PriorSpec& prior,
                           std::span<const double> theta_t,
                           std::span<const double> theta_s) {
  const Box& dom = prior.domain;
  if (!dom.contains(theta_t)) return 0.0;
  switch (prior.conditional) {
    case ConditionalKind::UniformBox:
      return 1.0 / dom.volume();
    case ConditionalKind::SumLinear:
      return (theta_s[0] + theta_t[0]) / (theta_s[0] + 0.5);
    case ConditionalKind::Delta:
      throw std::logic_error(
          "atomic conditional has no density; use the atom code path");
    case ConditionalKind::BoxConditional: {
      double dens = 1.0;
      for (int i = 0; i < dom.dim(); ++i) {
        double a = clipped_box_low(dom, i, theta_s[i], prior.c);
        double b = clipped_box_high(dom, i, theta_s[i], prior.c);
        if (theta_t[i] < a || theta_t[i] > b) return 0.0;
        dens /= (b - a);  // boundary-clipped boxes renormalize
      }
      return dens;
    }
    case ConditionalKind::GaussianConditional: {
      double dens = 1.0;
      const double inv_sqrt2pi = 0.398942280401432677939946;
      for (int i = 0; i < dom.dim(); ++i) {
        double z = (theta_t[i] - theta_s[i]) / prior.c;
        double mass = norm_cdf((dom.hi[i] - theta_s[i]) / prior.c) -
                      norm_cdf((dom.lo[i] - theta_s[i]) / prior.c);
        dens *= inv_sqrt2pi * std::exp(-0.5 * z * z) / (prior.c * mass);
      }
      return dens;
    }
    case ConditionalKind::GridDensity:
      return prior.table.at(theta_t[0], theta_s[0]);
  }
  return 0.0;
}

double marginal_density(const PriorSpec& prior,
                        std::span<const double> theta_s) {
  if (!prior.domain.contains(theta_s)) return 0.0;
  if (prior.marginal == MarginalKind::LinearPlusHalf)
    return theta_s[0] + 0.5;
  return 1.0 / prior.domain.volume();
}

VecD sample_marginal(const PriorSpec& prior, Rng& rng) {
  const Box& dom = prior.domain;
  VecD s(dom.dim());
  if (prior.marginal == MarginalKind::LinearPlusHalf) {
    // inverse CDF of t + 1/2 on [0,1]: solve t^2/2 + t/2 = u
    double u = rng.uniform();
    s[0] = 0.5 * (std::sqrt(1.0 + 8.0 * u) - 1.0);
    return s;
  }
  for (int i = 0; i < dom.dim(); ++i) s[i] = rng.uniform(dom.lo[i], dom.hi[i]);
  return s;
}

VecD sample_conditional(const PriorSpec& prior,
                        std::span<const double> theta_s, Rng& rng) {
  const Box& dom = prior.domain;
  VecD t(dom.dim());
  switch (prior.conditional) {
    case ConditionalKind::UniformBox:
      for (int i = 0; i < dom.dim(); ++i)
        t[i] = rng.uniform(dom.lo[i], dom.hi[i]);
      return t;
    case ConditionalKind::SumLinear: {
      // CDF given s: (s*t + t^2/2)/(s + 1/2)
      double s = theta_s[0], u = rng.uniform();
      t[0] = -s + std::sqrt(s * s + 2.0 * u * (s + 0.5));
      return t;
    }
    case ConditionalKind::Delta:
      t.assign(theta_s.begin(), theta_s.end());
      return t;
    case ConditionalKind::BoxConditional:
      for (int i = 0; i < dom.dim(); ++i) {
        double a = clipped_box_low(dom, i, theta_s[i], prior.c);
        double b = clipped_box_high(dom, i, theta_s[i], prior.c);
        t[i] = rng.uniform(a, b);
      }
      return t;
    case ConditionalKind::GaussianConditional:
      for (int i = 0; i < dom.dim(); ++i) {
        double fa = norm_cdf((dom.lo[i] - theta_s[i]) / prior.c);
        double fb = norm_cdf((dom.hi[i] - theta_s[i]) / prior.c);
        double u = fa + (fb - fa) * rng.uniform();
        t[i] = theta_s[i] + prior.c * norm_quantile(u);
        t[i] = std::clamp(t[i], dom.lo[i], dom.hi[i]);
      }
      return t;
    case ConditionalKind::GridDensity: {
      const auto& tab = prior.table;
      int r = std::clamp(
          int((theta_s[0] - tab.lo) / (tab.hi - tab.lo) * tab.res_s), 0,
          tab.res_s - 1);
      std::span<const double> row(tab.values.data() + size_t(r) * tab.res_t,
                                  size_t(tab.res_t));
      int k = rng.categorical(row);
      double cell = (tab.hi - tab.lo) / tab.res_t;
      t[0] = tab.lo + (k + rng.uniform()) * cell;
      return t;
    }
  }
  return t;
}

std::pair<VecD, VecD> sample_joint(const PriorSpec& prior, uint64_t seed) {
  Rng rng(seed);
  VecD s = sample_marginal(prior, rng);
  VecD t = sample_conditional(prior, s, rng);
  return {std::move(s), std::move(t)};
}

double tvtl_conditional_density(const TvtlConditional& tc, const Box& domain,
                                std::span<const double> theta_ti,
                                std::span<const double> theta_prev,
                                std::span<const double> theta_s) {
  int d = domain.dim();
  if (tc.j + tc.c_common > d)
    throw ConfigError("tvtl partition blocks overlap");
  double dens = 1.0;
  auto kernel = [&](double t, double anchor, int i) -> double {
    if (tc.kind == ConditionalKind::BoxConditional) {
      double a = std::max(domain.lo[i], anchor - tc.width);
      double b = std::min(domain.hi[i], anchor + tc.width);
      return (t >= a && t <= b) ? 1.0 / (b - a) : 0.0;
    }
    double z = (t - anchor) / tc.width;
    double mass = norm_cdf((domain.hi[i] - anchor) / tc.width) -
                  norm_cdf((domain.lo[i] - anchor) / tc.width);
    return 0.398942280401432677939946 * std::exp(-0.5 * z * z) /
           (tc.width * mass);
  };
  for (int i = 0; i < d; ++i) {
    if (theta_ti[i] < domain.lo[i] || theta_ti[i] > domain.hi[i]) return 0.0;
    if (i < tc.j)
      dens *= kernel(theta_ti[i], theta_s[i], i);
    else if (i < tc.j + tc.c_common)
      dens *= kernel(theta_ti[i], theta_prev[i], i);
    else
      dens /= domain.side(i);
  }
  return dens;
}

PropernessVerdict properness_check(const PriorSpec& prior,
                                   std::span<const double> theta_t_star,
                                   std::span<const double> theta_s_star,
                                   std::span<const double> delta_grid) {
  const Box& dom = prior.domain;
  PropernessVerdict v;

  // marginal: positive on a dense grid over the whole domain
  v.marginal_proper = true;
  const int kMarginalRes = 201;
  VecD s(dom.dim());
  long total = 1;
  for (int i = 0; i < dom.dim(); ++i) total *= kMarginalRes;
  for (long idx = 0; idx < total && v.marginal_proper; ++idx) {
    long rem = idx;
    for (int i = 0; i < dom.dim(); ++i) {
      int k = int(rem % kMarginalRes);
      rem /= kMarginalRes;
      s[i] = dom.lo[i] + dom.side(i) * (k + 0.5) / kMarginalRes;
    }
    if (!(marginal_density(prior, s) > 0.0)) v.marginal_proper = false;
  }

  if (prior.atomic()) {
    v.conditional_proper = false;
    v.note = "atomic conditional: zero mass off the diagonal";
    return v;
  }

  // conditional: look for radii (delta_s, delta_t) whose whole neighborhood
  // lattice has positive density
  const int kLatticePts = 7;
  VecD ts(dom.dim()), tt(dom.dim());
  for (double delta : delta_grid) {
    bool ok = true;
    long lat = 1;
    for (int i = 0; i < 2 * dom.dim(); ++i) lat *= kLatticePts;
    for (long idx = 0; idx < lat && ok; ++idx) {
      long rem = idx;
      bool inside = true;
      for (int i = 0; i < dom.dim(); ++i) {
        int k = int(rem % kLatticePts);
        rem /= kLatticePts;
        ts[i] = theta_s_star[i] + delta * (2.0 * k / (kLatticePts - 1) - 1.0);
        if (ts[i] < dom.lo[i] || ts[i] > dom.hi[i]) inside = false;
      }
      for (int i = 0; i < dom.dim(); ++i) {
        int k = int(rem % kLatticePts);
        rem /= kLatticePts;
        tt[i] = theta_t_star[i] + delta * (2.0 * k / (kLatticePts - 1) - 1.0);
        if (tt[i] < dom.lo[i] || tt[i] > dom.hi[i]) inside = false;
      }
      if (!inside) continue;  // Definition 2 only constrains points in Lambda
      if (!(conditional_density(prior, tt, ts) > 0.0)) ok = false;
    }
    if (ok) {
      v.conditional_proper = true;
      v.delta_s = v.delta_t = delta;
      return v;
    }
  }
  v.conditional_proper = false;
  v.note = "no tested radius gives positive density around the true pair";
  return v;
}

}  // namespace tlmix
