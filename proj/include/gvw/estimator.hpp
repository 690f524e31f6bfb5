#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gvw/mlp.hpp"
#include "gvw/model.hpp"
#include "gvw/surrogate.hpp"

namespace gvw {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const { return v >= lower && v <= upper; }
  double clamp(double v) const { return v < lower ? lower : (v > upper ? upper : v); }
  bool fixed() const { return lower == upper; }
};

struct GvwBounds {
  Interval rho{1e-8, 10.0};
  Interval alpha{0.05, 2.0};
  Interval beta{0.0, 2.0};
  Interval delta{-1.0, 1.0};

  void validate() const;
  bool contains(const GvwParams& p) const;
  GvwParams clamp(const GvwParams& p) const;
};

struct SolverTolerances {
  double step = 1e-10;
  double gradient = 1e-10;
  int max_iterations = 500;
};

/// Inputs of one estimation run.
struct EstimationProblem {
  Trajectory data;
  GvwBounds bounds;
  MlpSpec surrogate_spec{1, {32, 32}, 1};
  TrainConfig train_config{.validation_fraction = 0.0, .restarts = 4};
  int multistart_count = 16;
  std::uint64_t seed = 7;
  SolverTolerances tolerances;

  void validate() const;
};

/// Share level, its time derivative and the budget at one sample time.
struct RatePoint {
  double t = 0.0;
  double rate = 0.0;
  double share = 0.0;
  double budget = 0.0;
};

/// residual_l = rate_l - [rho b_l^alpha (1 - share_l)^beta - delta share_l].
/// Throws DomainError for a share outside [0, 1] or a negative budget.
Eigen::VectorXd rate_residuals(const GvwParams& params, std::span<const RatePoint> rates);

/// d residual / d (rho, alpha, beta, delta).
Eigen::MatrixXd rate_residual_jacobian(const GvwParams& params,
                                       std::span<const RatePoint> rates);

using ResidualFn = std::function<Eigen::VectorXd(const GvwParams&)>;
using ResidualJacobianFn = std::function<Eigen::MatrixXd(const GvwParams&)>;

struct NlsResult {
  GvwParams params;
  double objective = 0.0;  // sum of squared residuals
  int iterations = 0;
  /// Objective at the start and after every accepted step.
  std::vector<double> history;
  std::string stop_reason;
};

/// Bounded Levenberg-Marquardt over (rho, alpha, beta, delta): each trial
/// point is clamped into `bounds`. Stops on step norm < tol.step, gradient
/// norm < tol.gradient, tol.max_iterations, or when no damped step lowers
/// the objective. Without `jacobian` a central-difference Jacobian is used.
/// Throws NumericError if the residuals at `start` are non-finite.
NlsResult nls_solve(const ResidualFn& residuals, const GvwParams& start,
                    const GvwBounds& bounds, const SolverTolerances& tol = {},
                    const ResidualJacobianFn& jacobian = {});

struct StartOutcome {
  GvwParams start;
  GvwParams result;
  double start_objective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool failed = false;
  std::string note;
};

struct FitReport {
  GvwParams params;
  /// Mean squared rate residual at params.
  double residual_mse = 0.0;
  /// Sum of squared rate residuals at params.
  double objective = 0.0;
  std::string method;  // "dnn" or "fd"
  std::optional<TrainReport> surrogate_report;
  std::size_t starts_tried = 0;
  std::vector<StartOutcome> starts;
  /// False when the budget series barely varies; alpha is then held at 1
  /// and not reported.
  bool alpha_identifiable = true;
  std::vector<RatePoint> rates;
};

/// Differences of the observed shares, taken separately on each run of
/// equal budget so no stencil straddles a budget switch: three-point
/// Lagrange slopes (one-sided at run ends), two-point slopes on runs of two
/// samples. Where the budget changes at every sample the ordinary
/// three-point slope through the neighbours is used (one-sided at the ends
/// of the series), so such data reduce to plain central differences. A lone
/// sample next to a longer run is dropped.
std::vector<RatePoint> finite_difference_rates(const Trajectory& data);

/// Surrogate prediction and analytic time derivative at every sample time.
/// Predictions are clamped into [0, 1].
std::vector<RatePoint> surrogate_rates(const Surrogate& surrogate, const Trajectory& data);

/// Coefficient of variation of the positive budgets (0 if there are none).
double budget_variation(const Trajectory& data);

/// Multistart bounded NLS fit of GVW parameters to precomputed rates.
/// Throws EstimationError if every start fails.
FitReport fit_rates(std::vector<RatePoint> rates, const EstimationProblem& problem,
                    bool alpha_identifiable, const std::string& method);

/// Surrogate pipeline: train the network on the shares, differentiate it at
/// the sample times and fit the parameters to those rates.
FitReport fit_gvw(const EstimationProblem& problem);

/// Same NLS stage fed by finite-difference rates instead of a surrogate.
FitReport fit_gvw_fd(const EstimationProblem& problem);

/// Latin-hypercube start points over `bounds` (log-uniform in rho).
std::vector<GvwParams> latin_hypercube_starts(const GvwBounds& bounds, int count,
                                              std::uint64_t seed);

nlohmann::json to_json(const FitReport& report);

}  // namespace gvw
