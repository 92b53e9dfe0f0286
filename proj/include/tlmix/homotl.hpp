#pragma once

#include "tlmix/loss.hpp"

namespace tlmix {

// HomOTL-I: frozen source model plus online target model, combined with
// exponentially decaying domain weights g(x) = e^{-x}.
enum class HomOtlVariant {
  Original,      // hinge update loss, squared weighting loss
  CrossEntropy,  // cross-entropy for both (the logistic adaptation)
};

struct HomOtlState {
  FamilySpec family;
  double w_s = 0.5, w_t = 0.5;  // simplex: sum 1, nonnegative
  VecD theta_s;                 // frozen after init
  VecD theta_t;
  double eta = 0.01;
  HomOtlVariant variant = HomOtlVariant::CrossEntropy;
};

HomOtlState homotl_init(const FamilySpec& family, VecD theta_s_hat,
                        VecD theta_t0, double eta, HomOtlVariant variant);

void homotl_step(HomOtlState& s, const Observation& z);

struct HomOtlPrediction {
  double prob_one = 0.0;
  double label = 0.0;  // threshold 0.5, ties to 0
};
HomOtlPrediction homotl_predict(const HomOtlState& s, const VecD& x);

}  // namespace tlmix
