#include "tlmix/dpm.hpp"

#include <algorithm>
#include <cmath>

namespace tlmix {

static VecD draw_base(const GaussianBase& g0, const Box& box, Rng& rng) {
  int d = box.dim();
  VecD out(d);
  for (int i = 0; i < d; ++i) {
    double fa = norm_cdf((box.lo[i] - g0.mean[i]) / g0.scale[i]);
    double fb = norm_cdf((box.hi[i] - g0.mean[i]) / g0.scale[i]);
    double u = fa + (fb - fa) * rng.uniform();
    out[i] = g0.mean[i] + g0.scale[i] * norm_quantile(u);
    out[i] = std::clamp(out[i], box.lo[i], box.hi[i]);
  }
  return out;
}

static double lik(const FamilySpec& f, const VecD& theta,
                  const Observation& z) {
  double l = log_density(f, theta, z);
  return std::isfinite(l) ? std::exp(l) : 0.0;
}

// sample a fresh atom from the base posterior given z: importance resampling
// over the fixed base draws, weights P_{g0_b}(z)
static VecD base_posterior_draw(const std::vector<VecD>& draws,
                                const VecD& weights, Rng& rng) {
  return draws[rng.categorical(weights)];
}

std::vector<VecD> dpm_fit_source(const FamilySpec& family,
                                 const Dataset& source, double alpha,
                                 const GaussianBase& g0, int sweeps,
                                 uint64_t seed, int base_mc) {
  if (sweeps < 1) throw std::invalid_argument("dpm_fit_source: sweeps >= 1");
  Rng rng(seed);
  const int m = source.size();

  std::vector<VecD> draws(base_mc);
  for (auto& v : draws) v = draw_base(g0, family.box, rng);

  std::vector<VecD> base_lik(m, VecD(base_mc));
  std::vector<VecD> base_loglik(m, VecD(base_mc));
  VecD base_marg(m);
  for (int i = 0; i < m; ++i) {
    Observation z = source.obs(i);
    double acc = 0.0;
    for (int b = 0; b < base_mc; ++b) {
      base_lik[i][b] = lik(family, draws[b], z);
      base_loglik[i][b] =
          base_lik[i][b] > 0.0 ? std::log(base_lik[i][b]) : -1e300;
      acc += base_lik[i][b];
    }
    base_marg[i] = acc / base_mc;
  }

  std::vector<VecD> atoms(m);
  std::map<VecD, int> counts;
  for (int i = 0; i < m; ++i) {
    atoms[i] = base_posterior_draw(draws, base_lik[i], rng);
    counts[atoms[i]]++;
  }

  VecD w;
  std::vector<const VecD*> vals;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int i = 0; i < m; ++i) {
      Observation z = source.obs(i);
      auto it = counts.find(atoms[i]);
      if (--it->second == 0) counts.erase(it);
      w.clear();
      vals.clear();
      for (const auto& [v, c] : counts) {
        w.push_back(c * lik(family, v, z));
        vals.push_back(&v);
      }
      w.push_back(alpha * base_marg[i]);
      int pick = rng.categorical(w);
      if (pick < int(vals.size()))
        atoms[i] = *vals[pick];
      else
        atoms[i] = base_posterior_draw(draws, base_lik[i], rng);
      counts[atoms[i]]++;
    }
    // cluster-value refresh: redraw each cluster's value from its posterior
    // over the base pool given all members (the assignment conditional alone
    // never moves a value once founded)
    std::map<VecD, VecD> lw_by_value;
    for (int i = 0; i < m; ++i) {
      VecD& lw = lw_by_value
                     .try_emplace(atoms[i], VecD(base_mc, 0.0))
                     .first->second;
      for (int b = 0; b < base_mc; ++b) lw[b] += base_loglik[i][b];
    }
    std::map<VecD, int> next_counts;
    std::map<VecD, VecD> remap;
    for (const auto& [v, c] : counts) {
      const VecD& lw = lw_by_value.at(v);
      double mx = *std::max_element(lw.begin(), lw.end());
      VecD pw(base_mc);
      for (int b = 0; b < base_mc; ++b) pw[b] = std::exp(lw[b] - mx);
      remap[v] = draws[rng.categorical(pw)];
      next_counts[remap[v]] += c;
    }
    for (int i = 0; i < m; ++i) atoms[i] = remap[atoms[i]];
    counts = std::move(next_counts);
  }
  return atoms;
}

SourceClusters collapse_atoms(const std::vector<VecD>& atoms) {
  std::map<VecD, int> counts;
  for (const auto& a : atoms) counts[a]++;
  SourceClusters c;
  for (const auto& [v, n] : counts) {
    c.values.push_back(v);
    c.counts.push_back(n);
    c.total += n;
  }
  return c;
}

DpmState dpm_init(const FamilySpec& family, SourceClusters source,
                  const DpmOptions& opt, uint64_t trial_seed) {
  if (!(opt.alpha > 0.0)) throw ConfigError("dpm: alpha must be > 0");
  if (opt.beta < 0.0 || opt.beta > 1.0)
    throw ConfigError("dpm: beta must lie in [0,1]");
  DpmState s;
  s.family = family;
  s.opt = opt;
  s.source = std::move(source);
  s.data.d = family.kind == FamilyKind::Bernoulli ? 0 : family.d;
  Rng rng(substream(trial_seed, kStreamBase));
  s.g0_draws.resize(opt.base_mc);
  for (auto& v : s.g0_draws) v = draw_base(opt.g0, family.box, rng);
  return s;
}

DpmWeights dpm_conditional_weights(const DpmState& s, int exclude_index,
                                   const Observation& z) {
  DpmWeights w;
  for (const auto& [v, c] : s.unique_counts) {
    int cnt = c;
    if (exclude_index >= 0 && s.atoms[exclude_index] == v) cnt -= 1;
    if (cnt <= 0) continue;
    w.target_values.push_back(v);
    w.q_target.push_back(cnt * lik(s.family, v, z));
  }
  for (size_t k = 0; k < s.source.values.size(); ++k)
    w.q_source.push_back(s.opt.beta * s.opt.alpha *
                         (double(s.source.counts[k]) / s.source.total) *
                         lik(s.family, s.source.values[k], z));
  double marg;
  if (exclude_index >= 0) {
    marg = s.base_marg[exclude_index];
  } else {
    double acc = 0.0;
    for (const auto& g : s.g0_draws) acc += lik(s.family, g, z);
    marg = acc / s.opt.base_mc;
  }
  w.r = (1.0 - s.opt.beta) * s.opt.alpha * marg;

  double tot = w.r;
  for (double v : w.q_target) tot += v;
  for (double v : w.q_source) tot += v;
  if (!(tot > 0.0))
    throw TrialAbort("dpm: observation impossible under all atoms and base");
  for (double& v : w.q_target) v /= tot;
  for (double& v : w.q_source) v /= tot;
  w.r /= tot;
  return w;
}

// one conditional draw for datum i; expects the atom already removed from
// unique_counts when resampling an existing datum
static VecD conditional_draw(DpmState& s, int i, const Observation& z,
                             Rng& rng) {
  VecD w;
  std::vector<const VecD*> vals;
  for (const auto& [v, c] : s.unique_counts) {
    w.push_back(c * lik(s.family, v, z));
    vals.push_back(&v);
  }
  size_t n_target = w.size();
  for (size_t k = 0; k < s.source.values.size(); ++k)
    w.push_back(s.opt.beta * s.opt.alpha *
                (double(s.source.counts[k]) / s.source.total) *
                lik(s.family, s.source.values[k], z));
  w.push_back((1.0 - s.opt.beta) * s.opt.alpha * s.base_marg[i]);

  double tot = 0.0;
  for (double v : w) tot += v;
  if (!(tot > 0.0))
    throw TrialAbort("dpm: observation impossible under all atoms and base");
  size_t pick = size_t(rng.categorical(w));
  if (pick < n_target) return *vals[pick];
  if (pick < n_target + s.source.values.size())
    return s.source.values[pick - n_target];
  return base_posterior_draw(s.g0_draws, s.base_lik[i], rng);
}

void dpm_observe(DpmState& s, const Observation& z, Rng& rng) {
  s.data.push(z);
  int i = s.data.size() - 1;
  VecD bl(s.opt.base_mc);
  double acc = 0.0;
  for (int b = 0; b < s.opt.base_mc; ++b) {
    bl[b] = lik(s.family, s.g0_draws[b], z);
    acc += bl[b];
  }
  VecD bll(s.opt.base_mc);
  for (int b = 0; b < s.opt.base_mc; ++b)
    bll[b] = bl[b] > 0.0 ? std::log(bl[b]) : -1e300;
  s.base_lik.push_back(std::move(bl));
  s.base_loglik.push_back(std::move(bll));
  s.base_marg.push_back(acc / s.opt.base_mc);

  s.atoms.push_back(conditional_draw(s, i, z, rng));
  s.unique_counts[s.atoms[i]]++;

  for (int sweep = 0; sweep < s.opt.sweeps; ++sweep) dpm_gibbs_sweep(s, rng);
}

void dpm_gibbs_sweep(DpmState& s, Rng& rng) {
  for (int i = 0; i < s.data.size(); ++i) {
    Observation z = s.data.obs(i);
    auto it = s.unique_counts.find(s.atoms[i]);
    if (--it->second == 0) s.unique_counts.erase(it);
    s.atoms[i] = conditional_draw(s, i, z, rng);
    s.unique_counts[s.atoms[i]]++;
  }
  // refresh the value of every base-born cluster from its member posterior
  // over the pool; clusters sitting on frozen source atoms keep their value
  auto is_source_value = [&](const VecD& v) {
    for (const auto& sv : s.source.values)
      if (sv == v) return true;
    return false;
  };
  std::map<VecD, VecD> lw_by_value;
  for (int i = 0; i < s.data.size(); ++i) {
    if (is_source_value(s.atoms[i])) continue;
    VecD& lw = lw_by_value
                   .try_emplace(s.atoms[i], VecD(s.opt.base_mc, 0.0))
                   .first->second;
    for (int b = 0; b < s.opt.base_mc; ++b) lw[b] += s.base_loglik[i][b];
  }
  std::map<VecD, int> next_counts;
  std::map<VecD, VecD> remap;
  for (const auto& [v, c] : s.unique_counts) {
    if (is_source_value(v)) {
      next_counts[v] += c;
      continue;
    }
    const VecD& lw = lw_by_value.at(v);
    double mx = *std::max_element(lw.begin(), lw.end());
    VecD pw(s.opt.base_mc);
    for (int b = 0; b < s.opt.base_mc; ++b) pw[b] = std::exp(lw[b] - mx);
    remap[v] = s.g0_draws[rng.categorical(pw)];
    next_counts[remap[v]] += c;
  }
  for (auto& a : s.atoms) {
    auto r = remap.find(a);
    if (r != remap.end()) a = r->second;
  }
  s.unique_counts = std::move(next_counts);
}

DpmPrediction dpm_predict(const DpmState& s, const Observation& z, int K,
                          Rng& rng) {
  if (K < 1) throw std::invalid_argument("dpm_predict: K >= 1");
  // prior conditional for the upcoming datum: no likelihood terms
  VecD w;
  std::vector<const VecD*> vals;
  for (const auto& [v, c] : s.unique_counts) {
    w.push_back(double(c));
    vals.push_back(&v);
  }
  size_t n_target = w.size();
  for (size_t k = 0; k < s.source.values.size(); ++k)
    w.push_back(s.opt.beta * s.opt.alpha *
                (double(s.source.counts[k]) / s.source.total));
  w.push_back((1.0 - s.opt.beta) * s.opt.alpha);

  DpmPrediction out;
  double dens = 0.0, p1 = 0.0;
  for (int k = 0; k < K; ++k) {
    size_t pick = size_t(rng.categorical(w));
    const VecD* theta;
    if (pick < n_target)
      theta = vals[pick];
    else if (pick < n_target + s.source.values.size())
      theta = &s.source.values[pick - n_target];
    else
      theta = &s.g0_draws[size_t(rng.uniform() * s.g0_draws.size()) %
                          s.g0_draws.size()];
    dens += lik(s.family, *theta, z);
    if (s.family.kind == FamilyKind::Bernoulli) {
      p1 += (*theta)[0];
    } else {
      double t = 0.0;
      for (int j = 0; j < s.family.d; ++j) t += (*theta)[j] * z.x[j];
      p1 += sigmoid(t);
    }
  }
  out.log_density = dens > 0.0 ? std::log(dens / K) : kNegInf;
  out.prob_one = p1 / K;
  return out;
}

}  // namespace tlmix
