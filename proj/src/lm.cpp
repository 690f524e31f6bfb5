#include "gvw/lm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "gvw/error.hpp"

namespace gvw::lm {

void Options::validate() const {
  if (!(mu_initial > 0.0)) throw DomainError("LM initial mu must be > 0");
  if (!(mu_increase > 1.0)) throw DomainError("LM increase factor must be > 1");
  if (!(mu_decrease > 0.0 && mu_decrease < 1.0)) {
    throw DomainError("LM decrease factor must lie in (0, 1)");
  }
  if (!(mu_ceiling >= mu_initial)) throw DomainError("LM mu ceiling below initial mu");
  if (!(max_step_ratio >= 0.0)) throw DomainError("LM step ratio must be >= 0");
}

Solver::Solver(Problem problem, Vector start, Options options)
    : problem_(std::move(problem)), options_(options), params_(std::move(start)) {
  options_.validate();
  if (problem_.project) problem_.project(params_);
  residuals_ = problem_.residuals(params_);
  if (!residuals_.allFinite()) throw NumericError("non-finite residuals at start");
  loss_ = residuals_.squaredNorm();
  mu_ = options_.mu_initial;
}

bool Solver::solve_step(const Matrix& jac, const Matrix& normal, const Vector& gradient,
                        double mu, Vector& step) const {
  const auto n = jac.cols();
  if (!options_.scale_damping && jac.rows() < n) {
    // (J^T J + mu I)^-1 J^T r == J^T (J J^T + mu I)^-1 r; the right side
    // solves a smaller system when there are fewer residuals than unknowns.
    Matrix outer = jac * jac.transpose();
    outer.diagonal().array() += mu;
    Eigen::LDLT<Matrix> ldlt(outer);
    if (ldlt.info() != Eigen::Success) return false;
    step = -(jac.transpose() * ldlt.solve(residuals_));
  } else {
    Matrix damped = normal;
    if (options_.scale_damping) {
      for (Eigen::Index i = 0; i < n; ++i) {
        damped(i, i) += mu * std::max(normal(i, i), 1e-12);
      }
    } else {
      damped.diagonal().array() += mu;
    }
    Eigen::LDLT<Matrix> ldlt(damped);
    if (ldlt.info() != Eigen::Success) return false;
    step = -ldlt.solve(gradient);
  }
  return step.allFinite();
}

bool Solver::within_step_limit(const Vector& step) const {
  if (options_.max_step_ratio <= 0.0) return true;
  return step.norm() <= options_.max_step_ratio * std::max(1.0, params_.norm());
}

StepOutcome Solver::iterate() {
  const Matrix jac = problem_.jacobian(params_);
  if (!jac.allFinite()) throw NumericError("non-finite Jacobian");
  const Vector gradient = jac.transpose() * residuals_;
  gradient_norm_ = gradient.lpNorm<Eigen::Infinity>();
  Matrix normal;
  if (options_.scale_damping || jac.rows() >= jac.cols()) {
    normal = jac.transpose() * jac;
  }

  Vector step;
  while (mu_ <= options_.mu_ceiling) {
    if (solve_step(jac, normal, gradient, mu_, step) && within_step_limit(step)) {
      Vector trial = params_ + step;
      if (problem_.project) problem_.project(trial);
      Vector trial_residuals = problem_.residuals(trial);
      const double trial_loss = trial_residuals.squaredNorm();
      if (std::isfinite(trial_loss) && trial_loss < loss_) {
        step_norm_ = (trial - params_).norm();
        params_ = std::move(trial);
        residuals_ = std::move(trial_residuals);
        loss_ = trial_loss;
        mu_ *= options_.mu_decrease;
        return StepOutcome::accepted;
      }
    }
    ++rejected_;
    mu_ *= options_.mu_increase;
  }
  return StepOutcome::mu_ceiling;
}

}  // namespace gvw::lm
