#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gvw/model.hpp"

namespace gvw {

/// log s_t = log c0 + c1 log s_{t-1} + c2 log b_t
struct EconParams {
  double c0 = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;

  void validate() const;
  bool operator==(const EconParams&) const = default;
};

struct OlsFit {
  EconParams params;
  /// Log-space residuals, one per usable row (the first row feeds the lag).
  std::vector<double> residuals;
  double condition_number = 0.0;
  bool pseudo_inverse = false;
};

/// Regresses log share on [1, log lagged share, log budget]. Normal
/// equations, switching to a pseudo-inverse when cond(X^T X) > 1e12.
/// Throws DataError naming the first nonpositive row or when fewer than
/// four rows remain, NumericError on collinear regressors.
OlsFit fit_ols(const Trajectory& data);

double predict_econ(const EconParams& params, double s_prev, double budget);

/// (c0 b_bar^c2)^(1 / (1 - c1)); DomainError when c1 >= 1.
double steady_state_econ(const EconParams& params, double b_bar);

/// Exponent of b_bar in the steady state: c2 / (1 - c1).
double econ_steady_exponent(const EconParams& params);

struct CompareScenario {
  PulseSpec pulse;
  /// Pulse curves are sampled at t = 0, 1, ..., horizon (one Econbase lag).
  int horizon = 100;
  /// Econbase needs a positive budget after cessation and a positive start.
  double floor_budget = 1e-6;
  double econ_initial = 0.01;
  std::vector<double> budget_grid;

  void validate() const;
};

enum class Curvature { diminishing, constant, increasing, mixed };

std::string to_string(Curvature c);

/// Sign pattern of the divided second differences of y over increasing x.
Curvature curvature(const std::vector<double>& x, const std::vector<double>& y,
                    double tol = 1e-9);

struct ModelComparison {
  std::vector<double> times;
  std::vector<double> gvw_pulse;
  std::vector<double> econ_pulse;
  /// Mean log decline per unit time after the pulse ends.
  double gvw_decay_rate = 0.0;
  double econ_decay_rate = 0.0;

  std::vector<double> budgets;
  std::vector<double> gvw_steady;
  std::vector<double> econ_steady;

  Curvature gvw_curvature = Curvature::mixed;
  Curvature econ_curvature = Curvature::mixed;
  double econ_exponent = 0.0;

  bool gvw_saturates = true;
  double gvw_bound = 1.0;
  bool econ_saturates = false;
};

ModelComparison compare_models(const GvwParams& gvw, const EconParams& econ,
                               const CompareScenario& scenario);

nlohmann::json to_json(const EconParams& params);
nlohmann::json to_json(const ModelComparison& comparison);

}  // namespace gvw
