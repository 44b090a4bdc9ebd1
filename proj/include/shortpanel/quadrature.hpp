#pragma once

#include <cmath>
#include <stdexcept>

namespace shortpanel::quadrature {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson rule on [a, b] with absolute tolerance tol. The interval
/// is pre-split into `pieces` panels so narrow peaks are not missed.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-8, int pieces = 16,
                        int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / pieces;
  double total = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + p * h;
    const double hi = p + 1 == pieces ? b : lo + h;
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, tol / pieces, max_depth);
  }
  return total;
}

}  // namespace shortpanel::quadrature
