#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvw/model.hpp"

namespace gvw {

enum class SweepIndex { alpha, beta };

std::string_view to_string(SweepIndex index);
/// Parses "alpha" / "beta"; throws DomainError otherwise.
SweepIndex parse_sweep_index(std::string_view name);

struct SweepOptions {
  /// Used only when delta <= 0: the share reached after this long from x0
  /// stands in for the steady state.
  double horizon = 2000.0;
  double x0 = 0.0;
};

struct SweepCurve {
  double value = 0.0;
  std::vector<double> budgets;
  std::vector<double> shares;
  /// Set when this curve failed; the sweep still returns the other curves.
  std::optional<std::string> error;
};

/// One steady-state (budget, share) curve per entry of `values`, with the
/// swept index of `base` replaced by that entry. Curves come back in the
/// order of `values`.
std::vector<SweepCurve> sensitivity_sweep(const GvwParams& base, SweepIndex vary,
                                          std::span<const double> values,
                                          std::span<const double> budget_grid,
                                          const SweepOptions& options = {});

enum class Shape { concave, s_shaped, undetermined };

std::string_view to_string(Shape shape);

/// Labels a response curve from the discrete second differences of its
/// shares taken in sampling order, so a log-spaced budget grid classifies
/// the curve against log budget. Differences within +-tol count as zero.
/// "concave": no difference above tol. "s_shaped": the nonzero differences
/// switch from positive to negative exactly once. Otherwise undetermined.
/// Needs at least 5 points with strictly increasing budgets.
Shape classify_shape(std::span<const double> budgets, std::span<const double> shares,
                     double tol = 1e-4);

}  // namespace gvw
