#pragma once

#include <functional>
#include <string>

namespace tlmix {

// Oracle-equality sweeps: every Bernoulli closed-form mixture is compared
// against adaptive quadrature of its defining integral. Used by the CLI
// `selftest` subcommand and by the acceptance suite.
struct OracleSweepResult {
  int cases = 0;
  double max_abs_err = 0.0;
  std::string worst_case;
  bool pass(double tol = 1e-9) const { return max_abs_err <= tol; }
};

// sum and delta priors over n <= n_max, all k_t, m <= m_max, all k_s
OracleSweepResult oracle_sweep_sum_prior(int n_max = 20, int m_max = 50);
OracleSweepResult oracle_sweep_delta_prior(int n_max = 20, int m_max = 50);
// box prior over n <= n_max, all k_t, and a grid x grid of (theta_s, c)
OracleSweepResult oracle_sweep_box_prior(int n_max = 20, int centers = 5,
                                         int widths = 5);
// nested 2-D adaptive quadrature spot checks of the sum prior
OracleSweepResult oracle_spotcheck_sum_2d(int cases, uint64_t seed);

// runs all sweeps, printing one line each; returns true when all pass
bool run_selftest(const std::function<void(const std::string&)>& emit);

}  // namespace tlmix
