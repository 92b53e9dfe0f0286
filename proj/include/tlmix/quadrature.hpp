#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace tlmix {

// Adaptive Simpson integration with relative tolerance. The interval is
// pre-split into panels so narrow peaks cannot be missed, and a coarse
// composite pass fixes the error scale before the adaptive refinement. Used
// by the test oracles and the CLI selftest; the closed-form modules never
// call it.
namespace detail {

inline double simpson_piece(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const std::function<double(double)>& f, double a,
                    double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson_piece(fa, flm, fm, m - a);
  double right = simpson_piece(fm, frm, fb, b - m);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double rel_tol = 1e-12,
                        int initial_panels = 64, int max_depth = 40) {
  const int np = initial_panels;
  const double h = (b - a) / np;
  // coarse composite pass: error scale and panel endpoint values
  std::vector<double> fv(2 * np + 1);
  for (int i = 0; i <= 2 * np; ++i) fv[i] = f(a + (b - a) * i / (2.0 * np));
  double coarse = 0.0;
  for (int p = 0; p < np; ++p)
    coarse += detail::simpson_piece(fv[2 * p], fv[2 * p + 1], fv[2 * p + 2], h);
  double scale = std::abs(coarse);
  if (scale == 0.0) scale = 1e-300;
  double tol_per_panel = scale * rel_tol / np;

  double total = 0.0;
  for (int p = 0; p < np; ++p) {
    double pa = a + h * p, pb = pa + h, pm = 0.5 * (pa + pb);
    double whole = detail::simpson_piece(fv[2 * p], fv[2 * p + 1], fv[2 * p + 2], h);
    total += detail::adapt(f, pa, fv[2 * p], pb, fv[2 * p + 2], pm,
                           fv[2 * p + 1], whole, tol_per_panel, max_depth);
  }
  return total;
}

}  // namespace tlmix
