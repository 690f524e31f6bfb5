#include "gvw/steady_state.hpp"

#include <cmath>

#include "gvw/error.hpp"
#include "gvw/numerics.hpp"

namespace gvw {
namespace {

void require_positive_decay(const GvwParams& params) {
  params.validate();
  if (!(params.delta > 0.0)) {
    throw DomainError("no steady state: delta must be > 0");
  }
}

double untapped(double x, double beta) {
  return beta == 0.0 ? 1.0 : std::pow(1.0 - x, beta);
}

}  // namespace

double steady_budget(const GvwParams& params, double x_bar) {
  require_positive_decay(params);
  if (!(x_bar > 0.0 && x_bar < 1.0)) {
    throw DomainError("steady share must lie in (0, 1)");
  }
  const double bracket = params.delta * x_bar / (params.rho * untapped(x_bar, params.beta));
  return std::pow(bracket, 1.0 / params.alpha);
}

double steady_share(const GvwParams& params, double b_bar, double tol) {
  require_positive_decay(params);
  if (!(b_bar > 0.0)) throw DomainError("steady budget must be > 0");
  const double effort = params.rho * std::pow(b_bar, params.alpha);
  const auto gap = [&](double x) {
    return effort * untapped(x, params.beta) - params.delta * x;
  };
  // gap(0) > 0; gap(1) = -delta < 0 unless beta == 0.
  if (gap(1.0) >= 0.0) {
    throw DomainError("no steady share in (0, 1): effort exceeds decay at x = 1");
  }
  return numerics::bisect(gap, 0.0, 1.0, tol);
}

double elasticity_threshold(const GvwParams& params, double tol) {
  require_positive_decay(params);
  const auto gap = [&](double x) {
    return params.rho * untapped(x, params.beta) - params.delta * x;
  };
  if (gap(1.0) >= 0.0) {
    throw DomainError("no elasticity threshold in (0, 1) for beta = 0 and rho >= delta");
  }
  return numerics::bisect(gap, 0.0, 1.0, tol);
}

}  // namespace gvw
