#include "gvw/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gvw/error.hpp"
#include "gvw/numerics.hpp"

namespace gvw {
namespace {

double budget_power(double b, double alpha) {
  if (b == 0.0) return 0.0;
  return std::pow(b, alpha);
}

double untapped_power(double x, double beta) {
  if (beta == 0.0) return 1.0;
  const double u = 1.0 - x;
  if (u <= 0.0) return 0.0;
  return std::pow(u, beta);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double response_rate(const GvwParams& params, double b, double x) {
  if (!(b >= 0.0)) throw DomainError("budget must be >= 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("share must lie in [0, 1]");
  return params.rho * budget_power(b, params.alpha) * untapped_power(x, params.beta) -
         params.delta * x;
}

double wom_approximation(double beta, double x) {
  return 1.0 - x + 2.0 * (1.0 - beta) * x * (1.0 - x);
}

Trajectory simulate(const GvwParams& params, const BudgetFn& budget, double x0,
                    std::span<const double> t_grid, const SimulateOptions& options) {
  params.validate();
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("x0 must lie in [0, 1]");
  if (t_grid.empty()) throw DomainError("time grid is empty");
  double min_dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    if (!(dt > 0.0)) throw DomainError("time grid must be strictly increasing");
    min_dt = std::min(min_dt, dt);
  }

  const auto rate = [&](double t, double x) {
    const double b = budget(t);
    if (!(b >= 0.0)) throw DomainError("budget function returned a negative value");
    const double r = response_rate(params, b, std::clamp(x, 0.0, 1.0));
    if (!std::isfinite(r)) throw IntegrationError("non-finite derivative", t);
    return r;
  };

  std::size_t clamp_events = 0;
  double first_clamp_t = std::numeric_limits<double>::quiet_NaN();
  // Steps the interval [t0, t1] with n equal steps, clamping after each.
  const auto integrate = [&](double t0, double x, double t1, std::size_t n,
                             std::size_t& clamps, double& first_clamp) {
    const double h = (t1 - t0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = t0 + static_cast<double>(i) * h;
      x = numerics::rk4_step(rate, t, x, h);
      if (!std::isfinite(x)) throw IntegrationError("non-finite state", t + h);
      if (x < 0.0 || x > 1.0) {
        if (clamps == 0) first_clamp = t + h;
        ++clamps;
        x = std::clamp(x, 0.0, 1.0);
      }
    }
    return x;
  };

  Trajectory out;
  out.samples.reserve(t_grid.size());
  out.samples.push_back({t_grid[0], budget(t_grid[0]), x0});
  const double base_h = min_dt / options.steps_per_interval;

  double x = x0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double t0 = t_grid[i - 1];
    const double t1 = t_grid[i];
    auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / base_h - 1e-9));
    n = std::max<std::size_t>(n, 1);

    std::size_t coarse_clamps = 0;
    double coarse_first = 0.0;
    double coarse = integrate(t0, x, t1, n, coarse_clamps, coarse_first);
    std::size_t fine_clamps = 0;
    double fine_first = 0.0;
    double fine = integrate(t0, x, t1, 2 * n, fine_clamps, fine_first);
    int refinements = 0;
    while (std::abs(fine - coarse) > options.refinement_tolerance) {
      if (++refinements > options.max_refinements) {
        throw IntegrationError("step refinement did not converge", t0);
      }
      n *= 2;
      coarse = fine;
      fine_clamps = 0;
      fine = integrate(t0, x, t1, 2 * n, fine_clamps, fine_first);
    }
    if (fine_clamps > 0 && clamp_events == 0) first_clamp_t = fine_first;
    clamp_events += fine_clamps;
    x = fine;
    out.samples.push_back({t1, budget(t1), x});
  }

  out.meta["source"] = "simulate";
  out.meta["clamp_events"] = std::to_string(clamp_events);
  if (clamp_events > 0) out.meta["first_clamp_t"] = format_number(first_clamp_t);
  return out;
}

QuadraticReduction taylor_reduce(const GvwParams& params, double b0) {
  params.validate();
  if (!(b0 > 0.0)) throw DomainError("b0 must be > 0");
  const double effort = params.rho * std::pow(b0, params.alpha);
  QuadraticReduction q;
  q.k1 = effort * params.beta * (params.beta - 1.0) / 2.0;
  q.k2 = -effort * params.beta - params.delta;
  q.k3 = effort;

  std::vector<double> candidates;
  if (q.k1 == 0.0) {
    if (q.k2 != 0.0) candidates.push_back(-q.k3 / q.k2);
  } else {
    const double disc = q.k2 * q.k2 - 4.0 * q.k1 * q.k3;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double p = -0.5 * (q.k2 + std::copysign(sq, q.k2));
      if (p != 0.0) {
        candidates.push_back(p / q.k1);
        candidates.push_back(q.k3 / p);
      } else {
        candidates.push_back(0.0);
      }
    }
  }
  if (q.k1 == 0.0 && q.k2 == 0.0) {
    q.x_hat = std::numeric_limits<double>::infinity();
    return q;
  }
  if (candidates.empty()) throw NumericError("reduced quadratic has no real equilibrium");
  // Linearized rate 2 k1 r + k2 is most negative at the attracting root.
  double best = candidates.front();
  for (double r : candidates) {
    if (2.0 * q.k1 * r + q.k2 < 2.0 * q.k1 * best + q.k2) best = r;
  }
  q.x_hat = best;
  return q;
}

double integrate_quadratic(const QuadraticReduction& q, double x0, double t,
                           double max_step) {
  if (t <= 0.0) return x0;
  const auto steps = static_cast<std::size_t>(std::ceil(t / max_step));
  const auto f = [&q](double, double x) { return q.rate(x); };
  return numerics::rk4_integrate(f, 0.0, x0, t, std::max<std::size_t>(steps, 1));
}

namespace {

// Solution of dx/dt = k1 x^2 + k2 x + k3 on [0, t] from x0.
double reduced_solution(const QuadraticReduction& q, double x0, double t) {
  if (q.k1 == 0.0 && q.k2 == 0.0) return x0 + q.k3 * t;
  const double offset = x0 - q.x_hat;
  if (offset == 0.0) return q.x_hat;
  if (q.k1 == 0.0) return q.x_hat + offset * std::exp(q.k2 * t);

  // z = x - x_hat obeys z' = lambda z + k1 z^2; 1/z is linear-affine.
  const double lambda = 2.0 * q.k1 * q.x_hat + q.k2;
  const double scale = std::abs(q.k2) + std::abs(q.k1) + std::abs(q.k3);
  if (std::abs(lambda) <= 1e-14 * scale) {
    // Double root: the closed form is singular.
    return integrate_quadratic(q, x0, t, 1e-4);
  }
  const double growth = std::exp(lambda * t);
  // -expm1(lambda t) / lambda == (1 - e^{lambda t}) / lambda without cancellation.
  const double denom = 1.0 / offset - q.k1 * std::expm1(lambda * t) / lambda;
  return q.x_hat + growth / denom;
}

}  // namespace

double pulse_response(const GvwParams& params, const PulseSpec& pulse, double t) {
  pulse.validate();
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");
  const QuadraticReduction q = taylor_reduce(params, pulse.b0);
  const double x = t <= pulse.t_end
                       ? reduced_solution(q, pulse.x0, t)
                       : reduced_solution(q, pulse.x0, pulse.t_end) *
                             std::exp(-params.delta * (t - pulse.t_end));
  if (!std::isfinite(x)) throw NumericError("pulse response diverges");
  return x;
}

}  // namespace gvw
