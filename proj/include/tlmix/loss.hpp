#pragma once

#include "tlmix/family.hpp"

namespace tlmix {

enum class LossKind { Log, CrossEntropy, ZeroOne, Squared, Hinge };

struct LossSpec {
  LossKind kind = LossKind::Log;
  double bound = 0.0;  // M, required for the bounded kinds

  bool is_log() const {
    return kind == LossKind::Log || kind == LossKind::CrossEntropy;
  }
  void validate() const {
    if (!is_log() && !(bound > 0.0))
      throw ConfigError("bounded loss kinds require bound M > 0");
  }
};

// Pointwise parametric loss l(theta, z) used by EMPU and HomOTL.
double loss_value(const LossSpec& loss, const FamilySpec& f,
                  std::span<const double> theta, const Observation& z);

// Gradient in theta; ZeroOne is not differentiable and throws.
VecD loss_gradient(const LossSpec& loss, const FamilySpec& f,
                   std::span<const double> theta, const Observation& z);

// Loss of a concrete action against a binary outcome (bounded kinds only).
double action_loss(const LossSpec& loss, double action, double y);

}  // namespace tlmix
