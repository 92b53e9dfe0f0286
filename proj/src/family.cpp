#include "tlmix/family.hpp"

#include <algorithm>
#include <cmath>

namespace tlmix {

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return kNegInf;
    if (p == 1.0) return kPosInf;
    throw std::invalid_argument("norm_quantile: p outside [0,1]");
  }
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  // one Halley step against the exact CDF
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2 * 3.14159265358979323846) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return x;
}

bool Box::contains(std::span<const double> p) const {
  for (int i = 0; i < dim(); ++i)
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
  return true;
}

bool Box::strictly_inside(std::span<const double> p) const {
  for (int i = 0; i < dim(); ++i)
    if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= side(i);
  return v;
}

void Box::clamp(std::span<double> p) const {
  for (int i = 0; i < dim(); ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
}

FamilySpec FamilySpec::bernoulli(double lo, double hi) {
  FamilySpec f;
  f.kind = FamilyKind::Bernoulli;
  f.d = 1;
  f.box = Box{{lo}, {hi}};
  f.validate();
  return f;
}

FamilySpec FamilySpec::logistic(VecD mean, VecD cov_diag) {
  FamilySpec f;
  f.kind = FamilyKind::Logistic;
  f.d = int(mean.size());
  f.box = Box::unit(f.d);
  f.covariates = CovariateModel{std::move(mean), std::move(cov_diag)};
  f.validate();
  return f;
}

void FamilySpec::validate() const {
  if (box.dim() != d) throw ConfigError("family: box dimension != d");
  if (kind == FamilyKind::Bernoulli) {
    if (d != 1) throw ConfigError("Bernoulli family requires d = 1");
    if (box.lo[0] < 0.0 || box.hi[0] > 1.0)
      throw ConfigError("Bernoulli box must lie inside [0,1]");
  } else {
    if (int(covariates.mean.size()) != d ||
        int(covariates.cov_diag.size()) != d)
      throw ConfigError("logistic covariate model dimension mismatch");
    for (double v : covariates.cov_diag)
      if (!(v > 0.0)) throw ConfigError("logistic covariate covariance must be positive definite");
  }
}

Observation Dataset::obs(int i) const {
  Observation z;
  z.y = ys[i];
  auto xi = x(i);
  z.x.assign(xi.begin(), xi.end());
  return z;
}

void Dataset::push(const Observation& z) {
  if (ys.empty()) d = int(z.x.size());
  xs.insert(xs.end(), z.x.begin(), z.x.end());
  ys.push_back(uint8_t(z.y != 0.0));
}

long Dataset::ones() const {
  long k = 0;
  for (uint8_t y : ys) k += y;
  return k;
}

double log_density(const FamilySpec& f, std::span<const double> theta,
                   const Observation& z) {
  if (f.kind == FamilyKind::Bernoulli) {
    double p = theta[0];
    if (z.y != 0.0) return p > 0.0 ? std::log(p) : kNegInf;
    return p < 1.0 ? std::log1p(-p) : kNegInf;
  }
  double t = 0.0;
  for (int i = 0; i < f.d; ++i) t += theta[i] * z.x[i];
  // y*log(sigma) + (1-y)*log(1-sigma) = y*t - log(1+e^t)
  return z.y * t - log1pexp(t);
}

VecD grad_log_density(const FamilySpec& f, std::span<const double> theta,
                      const Observation& z) {
  if (f.kind == FamilyKind::Bernoulli) {
    // the Bernoulli log likelihood is singular at 0 and 1; the logistic one
    // is smooth everywhere, so only this branch guards the boundary
    double p = theta[0];
    if (!(p > 0.0 && p < 1.0))
      throw std::domain_error("gradient undefined at boundary");
    return {z.y != 0.0 ? 1.0 / p : -1.0 / (1.0 - p)};
  }
  double t = 0.0;
  for (int i = 0; i < f.d; ++i) t += theta[i] * z.x[i];
  double r = z.y - sigmoid(t);
  VecD g(f.d);
  for (int i = 0; i < f.d; ++i) g[i] = r * z.x[i];
  return g;
}

Observation sample_obs(const FamilySpec& f, std::span<const double> theta,
                       Rng& rng) {
  if (f.kind == FamilyKind::Bernoulli)
    return Observation{rng.bernoulli(theta[0]) ? 1.0 : 0.0, {}};
  Observation z;
  z.x.resize(f.d);
  double t = 0.0;
  for (int i = 0; i < f.d; ++i) {
    z.x[i] = f.covariates.mean[i] +
             std::sqrt(f.covariates.cov_diag[i]) * rng.normal();
    t += theta[i] * z.x[i];
  }
  z.y = rng.bernoulli(sigmoid(t)) ? 1.0 : 0.0;
  return z;
}

Observation sample_obs(const FamilySpec& f, std::span<const double> theta,
                       uint64_t seed) {
  Rng rng(seed);
  return sample_obs(f, theta, rng);
}

Dataset sample_dataset(const FamilySpec& f, std::span<const double> theta,
                       int count, Rng& rng) {
  Dataset ds;
  ds.d = f.kind == FamilyKind::Bernoulli ? 0 : f.d;
  ds.xs.reserve(size_t(count) * ds.d);
  ds.ys.reserve(count);
  for (int i = 0; i < count; ++i) ds.push(sample_obs(f, theta, rng));
  return ds;
}

static double kl_bernoulli(double a, double b) {
  if (a == b) return 0.0;
  double t = 0.0;
  if (a > 0.0) {
    if (b <= 0.0) return kPosInf;
    t += a * std::log(a / b);
  }
  if (a < 1.0) {
    if (b >= 1.0) return kPosInf;
    t += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  }
  return t;
}

double kl_divergence(const FamilySpec& f, std::span<const double> a,
                     std::span<const double> b) {
  if (f.kind == FamilyKind::Bernoulli) return kl_bernoulli(a[0], b[0]);
  bool equal = true;
  for (int i = 0; i < f.d; ++i) equal = equal && a[i] == b[i];
  if (equal) return 0.0;
  Rng rng(f.mc_seed);
  KahanSum acc;
  for (int s = 0; s < f.mc_draws; ++s) {
    double ta = 0.0, tb = 0.0;
    for (int i = 0; i < f.d; ++i) {
      double xi = f.covariates.mean[i] +
                  std::sqrt(f.covariates.cov_diag[i]) * rng.normal();
      ta += a[i] * xi;
      tb += b[i] * xi;
    }
    acc.add(kl_bernoulli(sigmoid(ta), sigmoid(tb)));
  }
  return acc.value() / f.mc_draws;
}

Eigen::MatrixXd fisher_information(const FamilySpec& f,
                                   std::span<const double> theta) {
  if (f.kind == FamilyKind::Bernoulli) {
    double p = theta[0];
    if (!(p > 0.0 && p < 1.0))
      throw std::domain_error("Fisher information undefined at boundary");
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = 1.0 / (p * (1.0 - p));
    return m;
  }
  Rng rng(f.mc_seed);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(f.d, f.d);
  VecD x(f.d);
  for (int s = 0; s < f.mc_draws; ++s) {
    double t = 0.0;
    for (int i = 0; i < f.d; ++i) {
      x[i] = f.covariates.mean[i] +
             std::sqrt(f.covariates.cov_diag[i]) * rng.normal();
      t += theta[i] * x[i];
    }
    double w = sigmoid(t);
    w = w * (1.0 - w);
    for (int i = 0; i < f.d; ++i)
      for (int j = 0; j < f.d; ++j) m(i, j) += w * x[i] * x[j];
  }
  return m / double(f.mc_draws);
}

}  // namespace tlmix
