#pragma once

#include <cmath>
#include <utility>

namespace edt {

// Golden-section minimum of a unimodal f on [lo, hi], relative x tolerance.
// Returns {argmin, f(argmin)}.
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, double rel_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 400 && (b - a) > rel_tol * (std::fabs(b) + 1e-300); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  double xm = 0.5 * (a + b);
  return {xm, f(xm)};
}

// Bisection for the boundary of a monotone predicate on [lo, hi].
// Precondition: pred(hi) is true, pred(lo) is false; returns the smallest x with
// pred(x) true, to the given relative tolerance (true side).
template <class P>
double bisect_to_true(P&& pred, double lo, double hi, double rel_tol, int max_it = 200) {
  for (int it = 0; it < max_it && (hi - lo) > rel_tol * (std::fabs(hi) + 1e-300); ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval below double resolution
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Same, absolute tolerance; returns the largest x with pred(x) true given
// pred(lo) true, pred(hi) false.
template <class P>
double bisect_to_true_abs_upper(P&& pred, double lo, double hi, double abs_tol,
                                int max_it = 200) {
  for (int it = 0; it < max_it && (hi - lo) > abs_tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (pred(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace edt
