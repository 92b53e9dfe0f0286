#include "tlmix/loss.hpp"

#include <cmath>

namespace tlmix {

static double prob_one(const FamilySpec& f, std::span<const double> theta,
                       const Observation& z) {
  if (f.kind == FamilyKind::Bernoulli) return theta[0];
  double t = 0.0;
  for (int i = 0; i < f.d; ++i) t += theta[i] * z.x[i];
  return sigmoid(t);
}

double loss_value(const LossSpec& loss, const FamilySpec& f,
                  std::span<const double> theta, const Observation& z) {
  switch (loss.kind) {
    case LossKind::Log:
    case LossKind::CrossEntropy:
      return -log_density(f, theta, z);
    case LossKind::ZeroOne: {
      double pred = prob_one(f, theta, z) > 0.5 ? 1.0 : 0.0;
      return pred == z.y ? 0.0 : 1.0;
    }
    case LossKind::Squared: {
      double p = prob_one(f, theta, z);
      return (p - z.y) * (p - z.y);
    }
    case LossKind::Hinge: {
      if (f.kind != FamilyKind::Logistic)
        throw ConfigError("hinge loss is defined for logistic models only");
      double t = 0.0;
      for (int i = 0; i < f.d; ++i) t += theta[i] * z.x[i];
      double margin = (2.0 * z.y - 1.0) * t;
      return std::max(0.0, 1.0 - margin);
    }
  }
  return 0.0;
}

VecD loss_gradient(const LossSpec& loss, const FamilySpec& f,
                   std::span<const double> theta, const Observation& z) {
  switch (loss.kind) {
    case LossKind::Log:
    case LossKind::CrossEntropy: {
      VecD g = grad_log_density(f, theta, z);
      for (double& v : g) v = -v;
      return g;
    }
    case LossKind::ZeroOne:
      throw ConfigError("zero-one loss has no gradient");
    case LossKind::Squared: {
      double p = prob_one(f, theta, z);
      if (f.kind == FamilyKind::Bernoulli) return {2.0 * (p - z.y)};
      VecD g(f.d);
      double s = 2.0 * (p - z.y) * p * (1.0 - p);
      for (int i = 0; i < f.d; ++i) g[i] = s * z.x[i];
      return g;
    }
    case LossKind::Hinge: {
      double t = 0.0;
      for (int i = 0; i < f.d; ++i) t += theta[i] * z.x[i];
      double ytilde = 2.0 * z.y - 1.0;
      VecD g(f.d, 0.0);
      if (ytilde * t < 1.0)
        for (int i = 0; i < f.d; ++i) g[i] = -ytilde * z.x[i];
      return g;
    }
  }
  return {};
}

double action_loss(const LossSpec& loss, double action, double y) {
  switch (loss.kind) {
    case LossKind::ZeroOne:
      return action == y ? 0.0 : 1.0;
    case LossKind::Squared:
      return (action - y) * (action - y);
    case LossKind::Hinge:
      return std::max(0.0, 1.0 - (2.0 * y - 1.0) * action);
    default:
      throw ConfigError("log loss has no action form; use the predictive density");
  }
}

}  // namespace tlmix
