#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace gvw {

/// Parameters of the generalized Vidale-Wolfe response
///
///   dx/dt = rho * b^alpha * (1 - x)^beta - delta * x
///
/// rho is the ad-effectiveness index, alpha the ad-elasticity exponent,
/// beta the word-of-mouth exponent (smaller beta = stronger word of mouth)
/// and delta the decay index. delta may be negative for dynamics; the
/// steady-state routines reject delta <= 0.
struct GvwParams {
  double rho = 0.1;
  double alpha = 1.0;
  double beta = 1.0;
  double delta = 0.01;

  static constexpr double kAlphaMax = 2.0;
  static constexpr double kBetaMax = 2.0;

  /// Throws DomainError unless rho > 0, alpha in (0, 2], beta in [0, 2]
  /// and every field is finite.
  void validate() const;

  bool operator==(const GvwParams&) const = default;
};

struct Sample {
  double t = 0.0;
  double budget = 0.0;
  double share = 0.0;

  bool operator==(const Sample&) const = default;
};

/// Time-ordered (t, budget, share) observations plus free-form provenance.
struct Trajectory {
  std::vector<Sample> samples;
  std::map<std::string, std::string> meta;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  std::vector<double> times() const;
  std::vector<double> budgets() const;
  std::vector<double> shares() const;

  /// Throws DataError if times are not strictly increasing, a share lies
  /// outside [0, 1], a budget is negative or any value is non-finite.
  void validate() const;
};

/// Rectangular pulse: budget b0 on [0, t_end], zero afterwards.
struct PulseSpec {
  double b0 = 1.0;
  double t_end = 10.0;
  double x0 = 0.0;

  void validate() const;
};

/// Second-order reduction dx/dt = k1 x^2 + k2 x + k3 of the constant-budget
/// dynamics, with x_hat the equilibrium root selected in [0, 1].
struct QuadraticReduction {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double x_hat = 0.0;

  double rate(double x) const { return (k1 * x + k2) * x + k3; }
};

struct SteadyState {
  double x_bar = 0.0;
  double b_bar = 0.0;
};

}  // namespace gvw
