#include "gvw/sensitivity.hpp"

#include <exception>
#include <future>

#include "gvw/dynamics.hpp"
#include "gvw/error.hpp"
#include "gvw/steady_state.hpp"

namespace gvw {

std::string_view to_string(SweepIndex index) {
  return index == SweepIndex::alpha ? "alpha" : "beta";
}

SweepIndex parse_sweep_index(std::string_view name) {
  if (name == "alpha") return SweepIndex::alpha;
  if (name == "beta") return SweepIndex::beta;
  throw DomainError("sweep index must be 'alpha' or 'beta'");
}

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::concave:
      return "concave";
    case Shape::s_shaped:
      return "s-shaped";
    case Shape::undetermined:
      break;
  }
  return "undetermined";
}

namespace {

double long_run_share(const GvwParams& params, double budget,
                      const SweepOptions& options) {
  if (params.delta > 0.0) return steady_share(params, budget);
  const double grid[] = {0.0, options.horizon};
  const Trajectory path =
      simulate(params, [budget](double) { return budget; }, options.x0, grid);
  return path.samples.back().share;
}

SweepCurve sweep_one(GvwParams params, SweepIndex vary, double value,
                     std::span<const double> budget_grid, const SweepOptions& options) {
  SweepCurve curve;
  curve.value = value;
  try {
    (vary == SweepIndex::alpha ? params.alpha : params.beta) = value;
    params.validate();
    curve.budgets.assign(budget_grid.begin(), budget_grid.end());
    curve.shares.reserve(budget_grid.size());
    for (double b : budget_grid) curve.shares.push_back(long_run_share(params, b, options));
  } catch (const std::exception& e) {
    curve.shares.clear();
    curve.error = e.what();
  }
  return curve;
}

}  // namespace

std::vector<SweepCurve> sensitivity_sweep(const GvwParams& base, SweepIndex vary,
                                          std::span<const double> values,
                                          std::span<const double> budget_grid,
                                          const SweepOptions& options) {
  std::vector<std::future<SweepCurve>> pending;
  pending.reserve(values.size());
  for (double value : values) {
    pending.push_back(std::async(std::launch::async, sweep_one, base, vary, value,
                                 budget_grid, options));
  }
  std::vector<SweepCurve> curves;
  curves.reserve(values.size());
  for (auto& f : pending) curves.push_back(f.get());
  return curves;
}

Shape classify_shape(std::span<const double> budgets, std::span<const double> shares,
                     double tol) {
  if (budgets.size() != shares.size()) {
    throw DomainError("budget and share lists differ in length");
  }
  if (budgets.size() < 5) throw DomainError("shape classification needs >= 5 points");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (!(budgets[i] > budgets[i - 1])) {
      throw DomainError("budgets must be strictly increasing");
    }
  }

  bool any_positive = false;
  int sign_changes = 0;
  int previous = 0;
  bool starts_positive = false;
  for (std::size_t i = 1; i + 1 < shares.size(); ++i) {
    const double d2 = shares[i + 1] - 2.0 * shares[i] + shares[i - 1];
    const int sign = d2 > tol ? 1 : (d2 < -tol ? -1 : 0);
    if (sign == 0) continue;
    if (sign > 0) any_positive = true;
    if (previous == 0) {
      starts_positive = sign > 0;
    } else if (sign != previous) {
      ++sign_changes;
    }
    previous = sign;
  }
  if (!any_positive) return Shape::concave;
  if (starts_positive && sign_changes == 1) return Shape::s_shaped;
  return Shape::undetermined;
}

}  // namespace gvw
