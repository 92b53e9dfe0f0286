#include "tlmix/homotl.hpp"

#include <cmath>

namespace tlmix {

HomOtlState homotl_init(const FamilySpec& family, VecD theta_s_hat,
                        VecD theta_t0, double eta, HomOtlVariant variant) {
  HomOtlState s;
  s.family = family;
  s.theta_s = std::move(theta_s_hat);
  s.theta_t = std::move(theta_t0);
  s.eta = eta;
  s.variant = variant;
  return s;
}

void homotl_step(HomOtlState& s, const Observation& z) {
  LossSpec weighting{s.variant == HomOtlVariant::Original ? LossKind::Squared
                                                          : LossKind::CrossEntropy,
                     1.0};
  LossSpec update{s.variant == HomOtlVariant::Original ? LossKind::Hinge
                                                       : LossKind::CrossEntropy,
                  1.0};
  double ls = loss_value(weighting, s.family, s.theta_s, z);
  double lt = loss_value(weighting, s.family, s.theta_t, z);
  if (!std::isfinite(ls) || !std::isfinite(lt))
    throw TrialAbort("HomOTL: non-finite argument to the decay function g");
  double gs = s.w_s * std::exp(-ls);
  double gt = s.w_t * std::exp(-lt);
  double tot = gs + gt;
  if (!(tot > 0.0)) throw TrialAbort("HomOTL: both domain weights decayed to 0");
  s.w_s = gs / tot;
  s.w_t = gt / tot;

  VecD g = loss_gradient(update, s.family, s.theta_t, z);
  for (int j = 0; j < s.family.d; ++j) s.theta_t[j] -= s.eta * g[j];
}

HomOtlPrediction homotl_predict(const HomOtlState& s, const VecD& x) {
  auto model_prob = [&](const VecD& th) {
    if (s.family.kind == FamilyKind::Bernoulli) return th[0];
    double t = 0.0;
    for (int j = 0; j < s.family.d; ++j) t += th[j] * x[j];
    return sigmoid(t);
  };
  HomOtlPrediction p;
  p.prob_one = s.w_s * model_prob(s.theta_s) + s.w_t * model_prob(s.theta_t);
  p.label = p.prob_one > 0.5 ? 1.0 : 0.0;
  return p;
}

}  // namespace tlmix
