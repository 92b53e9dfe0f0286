#pragma once

#include <optional>
#include <string>

#include "tlmix/family.hpp"

namespace tlmix {

enum class MarginalKind { UniformBox, LinearPlusHalf };

enum class ConditionalKind {
  UniformBox,           // independent of theta_s
  SumLinear,            // joint w(s,t) = s + t on [0,1]^2
  Delta,                // theta_t = theta_s, atomic
  BoxConditional,       // uniform on [s-c, s+c]^d clipped to the domain
  GaussianConditional,  // N(s, c^2 I) truncated to the domain
  GridDensity,          // tabulated w(t|s), d = 1
};

// Tabulated conditional density on a regular grid, loaded from a plain-text
// matrix file: first line "lo hi res_s res_t", then res_s rows of res_t
// values (row-major, row = theta_s bin). Rows are piecewise-constant
// densities over theta_t and must each integrate to 1 over [lo, hi].
struct GridDensityTable {
  double lo = 0.0, hi = 1.0;
  int res_s = 0, res_t = 0;
  VecD values;

  static GridDensityTable load(const std::string& path);
  double at(double theta_t, double theta_s) const;
  void validate() const;  // each row integrates to 1 within 1e-6
};

// Default time-variant conditional w(theta_ti | theta_t,i-1, theta_s):
// the first j coordinates are tied to theta_s, the next c_common to the
// previous episode's parameter, the rest are uniform over the domain. Tie
// kernels are Box or Gaussian with the given width.
struct TvtlConditional {
  int j = 0;
  int c_common = 0;
  ConditionalKind kind = ConditionalKind::BoxConditional;
  double width = 0.05;
};

struct PriorSpec {
  MarginalKind marginal = MarginalKind::UniformBox;
  ConditionalKind conditional = ConditionalKind::UniformBox;
  double c = 0.0;  // Box / Gaussian half-width or per-coordinate std
  Box domain = Box::unit(1);
  GridDensityTable table;
  std::optional<TvtlConditional> tvtl;

  bool atomic() const { return conditional == ConditionalKind::Delta; }
  void validate() const;

  static PriorSpec sum_linear();  // marginal s + 1/2, joint s + t on [0,1]^2
  static PriorSpec delta_on_uniform(Box domain);
  static PriorSpec box_conditional(double c, Box domain,
                                   MarginalKind marg = MarginalKind::UniformBox);
  static PriorSpec gaussian_conditional(double c, Box domain,
                                        MarginalKind marg = MarginalKind::UniformBox);
  static PriorSpec independent_uniform(Box domain);
};

struct PropernessVerdict {
  bool marginal_proper = false;
  bool conditional_proper = false;
  double delta_s = 0.0, delta_t = 0.0;  // witness radii when proper
  std::string note;
};

// w(theta_t | theta_s). Throws for Delta: atomic conditionals have no
// density; callers must use the atom code path.
double conditional_density(const PriorSpec& prior, std::span<const double> theta_t,
                           std::span<const double> theta_s);

double marginal_density(const PriorSpec& prior, std::span<const double> theta_s);

VecD sample_marginal(const PriorSpec& prior, Rng& rng);
VecD sample_conditional(const PriorSpec& prior, std::span<const double> theta_s,
                        Rng& rng);
std::pair<VecD, VecD> sample_joint(const PriorSpec& prior, uint64_t seed);

double tvtl_conditional_density(const TvtlConditional& tc, const Box& domain,
                                std::span<const double> theta_ti,
                                std::span<const double> theta_prev,
                                std::span<const double> theta_s);

// Diagnostic check of Definition-2 properness at the true parameter pair.
PropernessVerdict properness_check(const PriorSpec& prior,
                                   std::span<const double> theta_t_star,
                                   std::span<const double> theta_s_star,
                                   std::span<const double> delta_grid);

}  // namespace tlmix
