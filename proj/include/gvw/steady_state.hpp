#pragma once

#include "gvw/model.hpp"

namespace gvw {

/// Budget that holds share x_bar at rest:
///   [delta x_bar / (rho (1 - x_bar)^beta)]^(1 / alpha).
/// Throws DomainError when delta <= 0 (no steady state exists) or
/// x_bar is outside (0, 1).
double steady_budget(const GvwParams& params, double x_bar);

/// The unique x_bar in (0, 1) with rho b_bar^alpha (1 - x_bar)^beta =
/// delta x_bar, by bisection to `tol`. Requires b_bar > 0 and delta > 0.
double steady_share(const GvwParams& params, double b_bar, double tol = 1e-10);

/// Share level x~ at which rho (1 - x~)^beta = delta x~, i.e. where the
/// steady budget equals one and the sign of d x_bar / d alpha flips:
/// below x~ a larger alpha lowers the steady share, above it raises it.
double elasticity_threshold(const GvwParams& params, double tol = 1e-10);

}  // namespace gvw
