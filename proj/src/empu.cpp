#include "tlmix/empu.hpp"

#include <cmath>

namespace tlmix {

VecD estimate_source_param(const FamilySpec& family, const Dataset& source,
                           bool* clamped) {
  if (source.size() < 1)
    throw std::invalid_argument("estimate_source_param requires m >= 1");
  if (family.kind == FamilyKind::Bernoulli) {
    double m = source.size();
    double p = source.ones() / m;
    double guard = 1.0 / (m + 2.0);
    double pc = std::clamp(p, guard, 1.0 - guard);
    if (clamped) *clamped = pc != p;
    return {pc};
  }
  if (clamped) *clamped = false;
  const int d = family.d;
  VecD theta(d, 0.0), g(d), g_prev(d), theta_prev(d);
  auto grad = [&](const VecD& th, VecD& out) {
    out.assign(d, 0.0);
    for (int i = 0; i < source.size(); ++i) {
      const double* x = source.xs.data() + size_t(i) * d;
      double t = 0.0;
      for (int j = 0; j < d; ++j) t += th[j] * x[j];
      double r = sigmoid(t) - source.ys[i];
      for (int j = 0; j < d; ++j) out[j] += r * x[j];
    }
    for (double& v : out) v /= source.size();
  };
  // Barzilai-Borwein spectral steps; the objective is smooth and convex
  grad(theta, g);
  double step = 0.1;
  for (int it = 0; it < 10000; ++it) {
    double gn2 = 0.0;
    for (double v : g) gn2 += v * v;
    if (std::sqrt(gn2) <= 1e-8) break;
    theta_prev = theta;
    g_prev = g;
    for (int j = 0; j < d; ++j) theta[j] -= step * g[j];
    grad(theta, g);
    double sy = 0.0, ss = 0.0;
    for (int j = 0; j < d; ++j) {
      double sj = theta[j] - theta_prev[j];
      double yj = g[j] - g_prev[j];
      sy += sj * yj;
      ss += sj * sj;
    }
    step = sy > 1e-300 ? ss / sy : step * 0.5;
  }
  return theta;
}

EmpuState empu_init(const PriorSpec& prior, const FamilySpec& family,
                    std::span<const double> theta_s_hat, int N, Rng& rng,
                    double eta) {
  if (N < 1) throw std::invalid_argument("empu_init requires N >= 1");
  EmpuState s;
  s.family = family;
  s.N = N;
  s.d = family.d;
  s.eta = eta;
  s.particles.resize(size_t(N) * s.d);
  s.weights.assign(N, 1.0 / N);
  s.atomic_prior_warning = prior.atomic() && N > 1;
  for (int i = 0; i < N; ++i) {
    VecD p = sample_conditional(prior, theta_s_hat, rng);
    std::copy(p.begin(), p.end(), s.particles.begin() + size_t(i) * s.d);
  }
  return s;
}

void empu_step(EmpuState& state, const Observation& z, const LossSpec& loss,
               double eta) {
  double wsum = 0.0;
  for (int i = 0; i < state.N; ++i) {
    auto th = state.particle(i);
    if (eta != 0.0) {
      VecD g;
      try {
        g = loss_gradient(loss, state.family, th, z);
      } catch (const std::domain_error& e) {
        throw TrialAbort(std::string("non-finite gradient: ") + e.what());
      }
      for (double v : g)
        if (!std::isfinite(v))
          throw TrialAbort("non-finite gradient at a particle");
      for (int j = 0; j < state.d; ++j) th[j] -= eta * g[j];
      state.family.box.clamp(th);
    }
    double l = loss_value(loss, state.family, th, z);
    state.weights[i] *= std::exp(-l);
    wsum += state.weights[i];
  }
  if (!(wsum > 0.0))
    throw TrialAbort("EMPU weights collapsed: every particle has infinite loss");
  for (double& w : state.weights) w /= wsum;
}

double empu_predict_prob_one(const EmpuState& state, const VecD& x) {
  double p = 0.0;
  for (int i = 0; i < state.N; ++i) {
    auto th = state.particle(i);
    if (state.family.kind == FamilyKind::Bernoulli) {
      p += state.weights[i] * th[0];
    } else {
      double t = 0.0;
      for (int j = 0; j < state.d; ++j) t += th[j] * x[j];
      p += state.weights[i] * sigmoid(t);
    }
  }
  return p;
}

double empu_predict_log_density(const EmpuState& state, const Observation& z) {
  VecD terms(state.N);
  for (int i = 0; i < state.N; ++i) {
    double w = state.weights[i];
    terms[i] = w > 0.0
                   ? std::log(w) + log_density(state.family, state.particle(i), z)
                   : kNegInf;
  }
  return logsumexp(terms);
}

int empu_sample_particle(const EmpuState& state, Rng& rng) {
  return rng.categorical(state.weights);
}

}  // namespace tlmix
