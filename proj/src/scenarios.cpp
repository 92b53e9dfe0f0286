#include "tlmix/harness.hpp"

namespace tlmix {

namespace {

ScenarioConfig bernoulli_base() {
  ScenarioConfig c;
  c.family = FamilySpec::bernoulli();
  c.loss.kind = LossKind::Log;
  c.algorithms = {{AlgoKind::Grid}, {AlgoKind::SourceFree}};
  return c;
}

ScenarioConfig logistic_base() {
  ScenarioConfig c;
  c.family = FamilySpec::logistic({5.0, -5.0}, {1.0, 1.0});
  c.prior = PriorSpec::gaussian_conditional(0.1, c.family.box);
  c.theta_t = {0.3, 0.5};
  c.theta_s = {0.2, 0.4};
  c.m = 5000;
  c.n = 150;
  c.loss.kind = LossKind::CrossEntropy;
  c.repeats = 200;
  c.hyper.g0 = GaussianBase::standard(2);
  c.algorithms = {{AlgoKind::Grid}, {AlgoKind::SourceFree}};
  return c;
}

std::map<std::string, ScenarioConfig> build_catalog() {
  std::map<std::string, ScenarioConfig> cat;

  {
    // single-trial predictive probabilities / posterior concentration
    ScenarioConfig c = bernoulli_base();
    c.name = "fig2_posteriors";
    c.prior = PriorSpec::box_conditional(0.1, c.family.box);
    c.theta_t = {1.0 / 3.0};
    c.theta_s = {0.4};
    c.m = 100000;
    c.n = 150;
    c.repeats = 1;
    c.base_seed = 7001;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = bernoulli_base();
    c.name = "fig3_regrets";
    c.prior = PriorSpec::box_conditional(0.1, c.family.box);
    c.theta_t = {1.0 / 3.0};
    c.theta_s = {0.35};
    c.m = 100000;
    c.n = 500;
    c.repeats = 2000;
    c.base_seed = 7003;
    c.bound_overlay = true;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig4_posteriors";
    c.repeats = 1;
    c.base_seed = 7004;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig5_positive";
    c.base_seed = 7005;
    c.bound_overlay = true;
    cat[c.name] = c;
    c.name = "fig5_transfer";
    cat[c.name] = c;
    c.name = "fig5_negative";
    c.theta_s = {0.8, 0.15};
    c.base_seed = 7006;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig6_empu";
    c.algorithms = {{AlgoKind::Grid}, {AlgoKind::Empu}, {AlgoKind::SourceFree}};
    c.hyper.N = 100;
    c.hyper.eta = 0.01;
    c.base_seed = 7007;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig7_sensitivity";
    // the quantization benefit is visible below the step-size jitter floor
    c.hyper.eta = 0.001;
    c.algorithms.clear();
    for (int N : {10, 25, 50, 100, 250}) {
      AlgoSpec a{AlgoKind::Empu};
      a.N = N;
      c.algorithms.push_back(a);
    }
    c.base_seed = 7008;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig8_homotl_mistakes";
    c.prior = PriorSpec::gaussian_conditional(0.3, c.family.box);
    c.algorithms = {{AlgoKind::Homotl}, {AlgoKind::Empu}};
    c.algorithms[1].N = 2;
    c.hyper.empu_sample_predict = true;
    c.hyper.homotl_variant = HomOtlVariant::Original;
    c.base_seed = 7009;
    cat[c.name] = c;
    c.name = "fig8_homotl_mistakes_large";
    c.theta_s = {0.8, 0.15};
    c.base_seed = 7010;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig9_homotl_regret";
    c.prior = PriorSpec::gaussian_conditional(0.3, c.family.box);
    c.algorithms = {{AlgoKind::Homotl}, {AlgoKind::Empu}, {AlgoKind::Grid}};
    c.algorithms[1].N = 2;
    c.hyper.homotl_variant = HomOtlVariant::Original;
    c.base_seed = 7011;
    cat[c.name] = c;
    c.name = "fig9_homotl_regret_large";
    c.theta_s = {0.8, 0.15};
    c.base_seed = 7012;
    cat[c.name] = c;
  }
  {
    ScenarioConfig c = logistic_base();
    c.name = "fig10_dpm";
    c.algorithms.clear();
    for (double beta : {0.99, 0.01}) {
      AlgoSpec a{AlgoKind::Dpm};
      a.beta = beta;
      c.algorithms.push_back(a);
    }
    c.repeats = 50;
    // conditional-likelihood atoms need a larger concentration than the
    // joint-likelihood variant; 0.01 locks every datum onto one atom
    c.hyper.alpha = 10.0;
    c.hyper.K = 30;
    c.hyper.sweeps = 20;
    c.base_seed = 7013;
    cat[c.name] = c;
    c.name = "fig10_dpm_large";
    c.theta_s = {0.8, 0.15};
    c.base_seed = 7014;
    cat[c.name] = c;
  }
  {
    // the exact-enumeration comparison scenario (sum prior, saturated source)
    ScenarioConfig c = bernoulli_base();
    c.name = "oracle_sum_prior";
    c.prior = PriorSpec::sum_linear();
    c.theta_t = {1.0 / 3.0};
    c.theta_s = {0.4};
    c.saturated = true;
    c.n = 500;
    c.repeats = 2000;
    c.base_seed = 7015;
    cat[c.name] = c;
  }
  return cat;
}

}  // namespace

const std::map<std::string, ScenarioConfig>& scenario_catalog() {
  static const std::map<std::string, ScenarioConfig> cat = build_catalog();
  return cat;
}

}  // namespace tlmix
