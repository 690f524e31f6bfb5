#pragma once

#include <Eigen/Dense>
#include <functional>

namespace gvw::lm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Levenberg-Marquardt damping control. mu starts at mu_initial, is
/// multiplied by mu_decrease after an accepted step and by mu_increase after
/// a rejected trial.
struct Options {
  double mu_initial = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 0.1;
  double mu_ceiling = 1e10;
  /// If positive, a trial step longer than max_step_ratio * max(1, |p|)
  /// is rejected like a step that fails to lower the loss.
  double max_step_ratio = 0.0;
  /// Damp with mu * diag(J^T J) (Marquardt scaling) instead of mu * I.
  bool scale_damping = false;

  void validate() const;
};

/// A least-squares problem: minimize |r(p)|^2.
struct Problem {
  std::function<Vector(const Vector&)> residuals;
  /// Row i, column j holds d r_i / d p_j.
  std::function<Matrix(const Vector&)> jacobian;
  /// Optional: maps a trial point back onto the feasible set.
  std::function<void(Vector&)> project;
};

enum class StepOutcome {
  accepted,
  /// mu exceeded the ceiling without finding a decrease; the iterate is
  /// unchanged.
  mu_ceiling,
};

/// Step-by-step LM driver. Each call to iterate() computes one Jacobian and
/// raises mu until a trial step strictly lowers the loss or mu passes the
/// ceiling. Singular or non-finite normal equations count as rejected trials.
class Solver {
public:
  Solver(Problem problem, Vector start, Options options = {});

  StepOutcome iterate();

  const Vector& params() const { return params_; }
  const Vector& residuals() const { return residuals_; }
  /// Sum of squared residuals at params().
  double loss() const { return loss_; }
  double mu() const { return mu_; }
  /// Infinity norm of J^T r from the latest Jacobian.
  double gradient_norm() const { return gradient_norm_; }
  /// Euclidean norm of the latest accepted step.
  double step_norm() const { return step_norm_; }
  int rejected_trials() const { return rejected_; }

private:
  bool solve_step(const Matrix& jac, const Matrix& normal, const Vector& gradient,
                  double mu, Vector& step) const;
  bool within_step_limit(const Vector& step) const;

  Problem problem_;
  Options options_;
  Vector params_;
  Vector residuals_;
  double loss_ = 0.0;
  double mu_ = 0.0;
  double gradient_norm_ = 0.0;
  double step_norm_ = 0.0;
  int rejected_ = 0;
};

}  // namespace gvw::lm
