#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "gvw/error.hpp"

namespace gvw::numerics {

/// Root of f on [lo, hi] by bisection. f(lo) and f(hi) must have opposite
/// signs (or one of them be zero). Stops once the bracket is narrower than
/// tol.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol = 1e-10) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (std::signbit(f_lo) == std::signbit(f_hi)) {
    throw NumericError("bisection endpoints do not bracket a root");
  }
  // 200 halvings exhaust double precision on any finite bracket.
  for (int iter = 0; iter < 200 && (hi - lo) > tol; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

/// One classical fourth-order Runge-Kutta step for the scalar ODE
/// x' = f(t, x).
template <typename F>
double rk4_step(F&& f, double t, double x, double h) {
  const double k1 = f(t, x);
  const double k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const double k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const double k4 = f(t + h, x + h * k3);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrates x' = f(t, x) from t0 to t1 with `steps` equal RK4 steps.
template <typename F>
double rk4_integrate(F&& f, double t0, double x, double t1, std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    x = rk4_step(f, t0 + static_cast<double>(i) * h, x, h);
  }
  return x;
}

}  // namespace gvw::numerics
