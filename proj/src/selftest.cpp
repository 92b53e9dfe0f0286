#include "tlmix/selftest.hpp"

#include <cmath>

#include "tlmix/bernoulli_exact.hpp"
#include "tlmix/quadrature.hpp"
#include "tlmix/rng.hpp"

namespace tlmix {

namespace {

double pow_int(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// int_0^1 t^a (1-t)^b dt by adaptive quadrature (the oracle side never uses
// gamma functions)
double beta_quad(int a, int b, double tol = 3e-11) {
  return integrate(
      [a, b](double t) { return pow_int(t, a) * pow_int(1.0 - t, b); }, 0.0,
      1.0, tol);
}

void track(OracleSweepResult& r, double err, const std::string& label) {
  r.cases++;
  if (err > r.max_abs_err) {
    r.max_abs_err = err;
    r.worst_case = label;
  }
}

}  // namespace

OracleSweepResult oracle_sweep_sum_prior(int n_max, int m_max) {
  OracleSweepResult res;
  // the defining double integral splits by linearity of integration; each
  // factor is evaluated by adaptive quadrature and cached
  std::vector<std::vector<double>> tgt(n_max + 1), tgt1(n_max + 1);
  for (int n = 0; n <= n_max; ++n)
    for (int k = 0; k <= n; ++k) {
      tgt[n].push_back(beta_quad(k, n - k));
      tgt1[n].push_back(beta_quad(k + 1, n - k));
    }
  for (int m = 0; m <= m_max; ++m) {
    for (int ks = 0; ks <= m; ++ks) {
      double S0 = beta_quad(ks, m - ks);      // int s^ks (1-s)^(m-ks)
      double S1 = beta_quad(ks + 1, m - ks);  // with an extra s
      double denom = S1 + 0.5 * S0;
      for (int n = 0; n <= n_max; ++n)
        for (int kt = 0; kt <= n; ++kt) {
          double want = (S1 * tgt[n][kt] + S0 * tgt1[n][kt]) / denom;
          double got = mixture_sum_prior({n, kt, m, ks});
          track(res, std::abs(got - want),
                "sum n=" + std::to_string(n) + " kt=" + std::to_string(kt) +
                    " m=" + std::to_string(m) + " ks=" + std::to_string(ks));
        }
    }
  }
  return res;
}

OracleSweepResult oracle_sweep_delta_prior(int n_max, int m_max) {
  OracleSweepResult res;
  for (int m = 0; m <= m_max; ++m)
    for (int ks = 0; ks <= m; ++ks) {
      double denom = beta_quad(ks, m - ks);
      for (int n = 0; n <= n_max; ++n)
        for (int kt = 0; kt <= n; ++kt) {
          double want = beta_quad(ks + kt, m - ks + n - kt) / denom;
          double got = mixture_delta_prior({n, kt, m, ks});
          track(res, std::abs(got - want),
                "delta n=" + std::to_string(n) + " kt=" + std::to_string(kt) +
                    " m=" + std::to_string(m) + " ks=" + std::to_string(ks));
        }
    }
  return res;
}

OracleSweepResult oracle_sweep_box_prior(int n_max, int centers, int widths) {
  OracleSweepResult res;
  for (int ci = 0; ci < centers; ++ci) {
    double center = 0.2 + 0.6 * ci / (centers - 1);
    for (int wi = 0; wi < widths; ++wi) {
      double c = 0.02 + 0.13 * wi / (widths - 1);
      if (!(center - c > 0.0 && center + c < 1.0)) continue;
      for (int n = 0; n <= n_max; ++n)
        for (int kt = 0; kt <= n; ++kt) {
          double want =
              integrate(
                  [kt, n](double t) {
                    return pow_int(t, kt) * pow_int(1.0 - t, n - kt);
                  },
                  center - c, center + c, 1e-12) /
              (2.0 * c);
          double got = mixture_box_prior(n, kt, center, c);
          track(res, std::abs(got - want),
                "box n=" + std::to_string(n) + " kt=" + std::to_string(kt) +
                    " center=" + std::to_string(center) +
                    " c=" + std::to_string(c));
        }
    }
  }
  return res;
}

OracleSweepResult oracle_spotcheck_sum_2d(int cases, uint64_t seed) {
  OracleSweepResult res;
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    int n = 1 + int(rng.uniform() * 10);
    int kt = int(rng.uniform() * (n + 1));
    int m = int(rng.uniform() * 20);
    int ks = int(rng.uniform() * (m + 1));
    // nested adaptive quadrature of the raw 2-D integrand
    auto inner = [&](double s) {
      return integrate(
          [&](double t) {
            return (s + t) * pow_int(t, kt) * pow_int(1.0 - t, n - kt) *
                   pow_int(s, ks) * pow_int(1.0 - s, m - ks);
          },
          0.0, 1.0, 3e-11, 24);
    };
    double num = integrate(inner, 0.0, 1.0, 1e-10, 24);
    double den = integrate(
        [&](double s) {
          return (s + 0.5) * pow_int(s, ks) * pow_int(1.0 - s, m - ks);
        },
        0.0, 1.0, 1e-12);
    double want = num / den;
    double got = mixture_sum_prior({n, kt, m, ks});
    track(res, std::abs(got - want),
          "sum2d n=" + std::to_string(n) + " kt=" + std::to_string(kt) +
              " m=" + std::to_string(m) + " ks=" + std::to_string(ks));
  }
  return res;
}

bool run_selftest(const std::function<void(const std::string&)>& emit) {
  bool ok = true;
  auto report = [&](const std::string& name, const OracleSweepResult& r) {
    bool pass = r.pass();
    ok = ok && pass;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: %s (%d cases, max abs err %.3g%s%s)",
                  name.c_str(), pass ? "PASS" : "FAIL", r.cases, r.max_abs_err,
                  pass ? "" : ", worst ", pass ? "" : r.worst_case.c_str());
    emit(buf);
  };
  report("oracle sum prior vs quadrature", oracle_sweep_sum_prior());
  report("oracle delta prior vs quadrature", oracle_sweep_delta_prior());
  report("oracle box prior vs quadrature", oracle_sweep_box_prior());
  report("oracle sum prior vs nested 2-D quadrature",
         oracle_spotcheck_sum_2d(100, 0xC0FFEE));
  return ok;
}

}  // namespace tlmix
