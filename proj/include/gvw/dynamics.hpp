#pragma once

#include <functional>
#include <span>

#include "gvw/model.hpp"

namespace gvw {

using BudgetFn = std::function<double(double)>;

/// rho * b^alpha * (1 - x)^beta - delta * x.
///
/// 0^alpha is taken as 0 and (1 - x)^beta at x = 1 as 0 for beta > 0 and 1
/// for beta = 0. Throws DomainError for b < 0 or x outside [0, 1].
double response_rate(const GvwParams& params, double b, double x);

/// The word-of-mouth shorthand 1 - x + 2 (1 - beta) x (1 - x) for the
/// untapped-market factor. Kept for comparison only; response_rate uses the
/// exact power (1 - x)^beta.
double wom_approximation(double beta, double x);

struct SimulateOptions {
  /// Base step is min(dt) / steps_per_interval.
  int steps_per_interval = 20;
  /// Halved-step results must agree with full-step results to this absolute
  /// tolerance on every output interval.
  double refinement_tolerance = 1e-8;
  /// Maximum number of step halvings per interval.
  int max_refinements = 20;
};

/// Integrates the GVW dynamics with fixed-step RK4 and returns shares at
/// every point of t_grid (t_grid[0] carries x0). Shares leaving [0, 1] are
/// clamped; the number of clamping events and the first clamped time are
/// recorded in meta["clamp_events"] / meta["first_clamp_t"].
///
/// Negative delta is allowed here. Throws IntegrationError if a non-finite
/// rate is met or step refinement cannot reach the tolerance.
Trajectory simulate(const GvwParams& params, const BudgetFn& budget, double x0,
                    std::span<const double> t_grid,
                    const SimulateOptions& options = {});

/// Taylor-reduces (1 - x)^beta to second order around x = 0 at constant
/// budget b0, giving dx/dt = k1 x^2 + k2 x + k3 with
///   k1 = rho beta (beta - 1) b0^alpha / 2,
///   k2 = -rho beta b0^alpha - delta,
///   k3 = rho b0^alpha.
/// x_hat is the attracting real root of the quadratic. It can lie slightly
/// above 1 for beta < 1, where the truncated series overstates (1 - x)^beta.
/// With k1 = k2 = 0 (beta = 0, delta = 0) there is no finite equilibrium and
/// x_hat is +inf. Throws DomainError for b0 <= 0 and NumericError if there is
/// no real root otherwise.
QuadraticReduction taylor_reduce(const GvwParams& params, double b0);

/// Share under a rectangular pulse: closed-form solution of the reduced
/// quadratic dynamics up to pulse.t_end, then x(T) exp(-delta (t - T)).
double pulse_response(const GvwParams& params, const PulseSpec& pulse, double t);

/// RK4 solution of dx/dt = k1 x^2 + k2 x + k3 from x0 at time 0 up to t with
/// step at most max_step.
double integrate_quadratic(const QuadraticReduction& q, double x0, double t,
                           double max_step = 1e-3);

}  // namespace gvw
