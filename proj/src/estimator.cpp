#include "gvw/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gvw/error.hpp"
#include "gvw/lm.hpp"

namespace gvw {
namespace {

Eigen::Vector4d to_vector(const GvwParams& p) { return {p.rho, p.alpha, p.beta, p.delta}; }

GvwParams from_vector(const Eigen::VectorXd& v) { return {v[0], v[1], v[2], v[3]}; }

void check_interval(const Interval& i, const char* name) {
  if (!std::isfinite(i.lower) || !std::isfinite(i.upper) || i.lower > i.upper) {
    throw DomainError(std::string("bounds for ") + name + " are not well ordered");
  }
}

bool at_bound(const Interval& i, double v) {
  if (i.fixed()) return false;
  const double slack = 1e-9 * (i.upper - i.lower);
  return v <= i.lower + slack || v >= i.upper - slack;
}

// Derivative at t of the parabola through three samples.
double three_point_slope(const Sample& a, const Sample& b, const Sample& c, double t) {
  const double ab = a.t - b.t, ac = a.t - c.t, bc = b.t - c.t;
  return a.share * ((t - b.t) + (t - c.t)) / (ab * ac) -
         b.share * ((t - a.t) + (t - c.t)) / (ab * bc) +
         c.share * ((t - a.t) + (t - b.t)) / (ac * bc);
}

}  // namespace

void GvwBounds::validate() const {
  check_interval(rho, "rho");
  check_interval(alpha, "alpha");
  check_interval(beta, "beta");
  check_interval(delta, "delta");
  if (!(rho.lower > 0.0)) throw DomainError("rho lower bound must be > 0");
  if (!(alpha.lower > 0.0) || alpha.upper > GvwParams::kAlphaMax) {
    throw DomainError("alpha bounds must lie in (0, 2]");
  }
  if (beta.lower < 0.0 || beta.upper > GvwParams::kBetaMax) {
    throw DomainError("beta bounds must lie in [0, 2]");
  }
}

bool GvwBounds::contains(const GvwParams& p) const {
  return rho.contains(p.rho) && alpha.contains(p.alpha) && beta.contains(p.beta) &&
         delta.contains(p.delta);
}

GvwParams GvwBounds::clamp(const GvwParams& p) const {
  return {rho.clamp(p.rho), alpha.clamp(p.alpha), beta.clamp(p.beta), delta.clamp(p.delta)};
}

void EstimationProblem::validate() const {
  bounds.validate();
  surrogate_spec.validate();
  train_config.validate();
  if (multistart_count < 1) throw DomainError("multistart_count must be >= 1");
  data.validate();
}

Eigen::VectorXd rate_residuals(const GvwParams& params, std::span<const RatePoint> rates) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(rates.size()));
  for (std::size_t l = 0; l < rates.size(); ++l) {
    const RatePoint& p = rates[l];
    if (!(p.share >= 0.0 && p.share <= 1.0)) throw DomainError("rate point share outside [0, 1]");
    if (!(p.budget >= 0.0)) throw DomainError("rate point budget negative");
    const double effort = p.budget == 0.0 ? 0.0 : params.rho * std::pow(p.budget, params.alpha);
    const double untapped = params.beta == 0.0 ? 1.0 : std::pow(1.0 - p.share, params.beta);
    r[static_cast<Eigen::Index>(l)] = p.rate - (effort * untapped - params.delta * p.share);
  }
  return r;
}

Eigen::MatrixXd rate_residual_jacobian(const GvwParams& params,
                                       std::span<const RatePoint> rates) {
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(rates.size()), 4);
  for (std::size_t l = 0; l < rates.size(); ++l) {
    const RatePoint& p = rates[l];
    const auto row = static_cast<Eigen::Index>(l);
    const double b_pow = p.budget == 0.0 ? 0.0 : std::pow(p.budget, params.alpha);
    const double log_b = p.budget > 0.0 ? std::log(p.budget) : 0.0;
    const double u = 1.0 - p.share;
    const double u_pow = params.beta == 0.0 ? 1.0 : (u > 0.0 ? std::pow(u, params.beta) : 0.0);
    const double log_u = u > 0.0 ? std::log(u) : 0.0;
    jac(row, 0) = -b_pow * u_pow;
    jac(row, 1) = -params.rho * b_pow * log_b * u_pow;
    jac(row, 2) = -params.rho * b_pow * u_pow * log_u;
    jac(row, 3) = p.share;
  }
  return jac;
}

NlsResult nls_solve(const ResidualFn& residuals, const GvwParams& start,
                    const GvwBounds& bounds, const SolverTolerances& tol,
                    const ResidualJacobianFn& jacobian) {
  bounds.validate();
  if (!bounds.contains(start)) throw DomainError("NLS start lies outside the bounds");

  lm::Problem problem;
  problem.residuals = [&](const Eigen::VectorXd& v) { return residuals(from_vector(v)); };
  if (jacobian) {
    problem.jacobian = [&](const Eigen::VectorXd& v) { return jacobian(from_vector(v)); };
  } else {
    problem.jacobian = [&](const Eigen::VectorXd& v) {
      const Eigen::VectorXd base = residuals(from_vector(v));
      Eigen::MatrixXd jac(base.size(), 4);
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-6 * std::max(std::abs(v[j]), 1e-3);
        Eigen::VectorXd up = v, down = v;
        up[j] += h;
        down[j] -= h;
        jac.col(j) = (residuals(from_vector(up)) - residuals(from_vector(down))) / (2.0 * h);
      }
      return jac;
    };
  }
  problem.project = [&bounds](Eigen::VectorXd& v) {
    const GvwParams p = bounds.clamp(from_vector(v));
    v = to_vector(p);
  };

  lm::Options options;
  options.scale_damping = true;
  lm::Solver solver(problem, to_vector(start), options);

  NlsResult result;
  result.history.push_back(solver.loss());
  result.stop_reason = "iteration limit";
  for (int it = 0; it < tol.max_iterations; ++it) {
    if (solver.loss() == 0.0) {
      result.stop_reason = "zero residual";
      break;
    }
    const lm::StepOutcome outcome = solver.iterate();
    if (solver.gradient_norm() < tol.gradient && outcome != lm::StepOutcome::accepted) {
      result.stop_reason = "gradient tolerance";
      break;
    }
    if (outcome == lm::StepOutcome::mu_ceiling) {
      result.stop_reason = "no further decrease";
      break;
    }
    ++result.iterations;
    result.history.push_back(solver.loss());
    if (solver.step_norm() < tol.step) {
      result.stop_reason = "step tolerance";
      break;
    }
    if (solver.gradient_norm() < tol.gradient) {
      result.stop_reason = "gradient tolerance";
      break;
    }
  }
  result.params = from_vector(solver.params());
  result.objective = solver.loss();
  return result;
}

std::vector<GvwParams> latin_hypercube_starts(const GvwBounds& bounds, int count,
                                              std::uint64_t seed) {
  bounds.validate();
  if (count < 1) throw DomainError("multistart count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(count);

  // One stratified coordinate in [0, 1) per start, independently permuted.
  const auto column = [&]() {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = (static_cast<double>(order[i]) + unit(rng)) / static_cast<double>(n);
    }
    return u;
  };
  const auto u_rho = column();
  const auto u_alpha = column();
  const auto u_beta = column();
  const auto u_delta = column();

  const auto lerp = [](const Interval& i, double u) {
    return i.clamp(i.lower + u * (i.upper - i.lower));
  };
  std::vector<GvwParams> starts;
  starts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_lo = std::log(bounds.rho.lower);
    const double log_hi = std::log(bounds.rho.upper);
    GvwParams p;
    p.rho = bounds.rho.clamp(std::exp(log_lo + u_rho[i] * (log_hi - log_lo)));
    p.alpha = lerp(bounds.alpha, u_alpha[i]);
    p.beta = lerp(bounds.beta, u_beta[i]);
    p.delta = lerp(bounds.delta, u_delta[i]);
    starts.push_back(p);
  }
  return starts;
}

std::vector<RatePoint> finite_difference_rates(const Trajectory& data) {
  data.validate();
  const auto& s = data.samples;
  if (s.size() < 3) throw DomainError("finite-difference rates need >= 3 samples");

  // Differences never reach across a budget change: a run of equal budgets
  // is differenced on its own, one-sided at both ends of the run. Where the
  // budget changes every sample the ordinary three-point slope is used; a
  // lone sample next to a longer run is dropped.
  std::vector<std::size_t> run_length(s.size());
  for (std::size_t start = 0; start < s.size();) {
    std::size_t end = start + 1;
    while (end < s.size() && s[end].budget == s[start].budget) ++end;
    for (std::size_t l = start; l < end; ++l) run_length[l] = end - start;
    start = end;
  }

  std::vector<RatePoint> out;
  out.reserve(s.size());
  for (std::size_t start = 0; start < s.size();) {
    const std::size_t len = run_length[start];
    const std::size_t end = start + len;
    for (std::size_t l = start; l < end; ++l) {
      double rate = 0.0;
      if (len == 1) {
        const bool left_single = l == 0 || run_length[l - 1] == 1;
        const bool right_single = l + 1 == s.size() || run_length[l + 1] == 1;
        if (!left_single || !right_single) continue;
        const std::size_t i0 = std::clamp<std::size_t>(l, 1, s.size() - 2) - 1;
        rate = three_point_slope(s[i0], s[i0 + 1], s[i0 + 2], s[l].t);
      } else if (len == 2) {
        rate = (s[start + 1].share - s[start].share) / (s[start + 1].t - s[start].t);
      } else {
        const std::size_t i0 = std::clamp(l, start + 1, end - 2) - 1;
        rate = three_point_slope(s[i0], s[i0 + 1], s[i0 + 2], s[l].t);
      }
      out.push_back({s[l].t, rate, s[l].share, s[l].budget});
    }
    start = end;
  }
  if (out.size() < 3) throw DomainError("too few usable samples for finite-difference rates");
  return out;
}

std::vector<RatePoint> surrogate_rates(const Surrogate& surrogate, const Trajectory& data) {
  std::vector<RatePoint> out;
  out.reserve(data.size());
  for (const auto& s : data.samples) {
    const double y = std::clamp(surrogate.predict(s.t), 0.0, 1.0);
    out.push_back({s.t, surrogate.rate(s.t), y, s.budget});
  }
  return out;
}

double budget_variation(const Trajectory& data) {
  std::vector<double> positive;
  for (const auto& s : data.samples) {
    if (s.budget > 0.0) positive.push_back(s.budget);
  }
  if (positive.empty()) return 0.0;
  const double mean =
      std::accumulate(positive.begin(), positive.end(), 0.0) / static_cast<double>(positive.size());
  double var = 0.0;
  for (double b : positive) var += (b - mean) * (b - mean);
  var /= static_cast<double>(positive.size());
  return std::sqrt(var) / mean;
}

FitReport fit_rates(std::vector<RatePoint> rates, const EstimationProblem& problem,
                    bool alpha_identifiable, const std::string& method) {
  GvwBounds bounds = problem.bounds;
  if (!alpha_identifiable) bounds.alpha = {bounds.alpha.clamp(1.0), bounds.alpha.clamp(1.0)};

  const ResidualFn residuals = [&rates](const GvwParams& p) { return rate_residuals(p, rates); };
  const ResidualJacobianFn jacobian = [&rates](const GvwParams& p) {
    return rate_residual_jacobian(p, rates);
  };

  const auto starts = latin_hypercube_starts(bounds, problem.multistart_count, problem.seed);
  std::vector<std::future<StartOutcome>> pending;
  pending.reserve(starts.size());
  for (const GvwParams& start : starts) {
    pending.push_back(std::async(std::launch::async, [&, start]() {
      StartOutcome out;
      out.start = start;
      try {
        const NlsResult r = nls_solve(residuals, start, bounds, problem.tolerances, jacobian);
        out.result = r.params;
        out.start_objective = r.history.front();
        out.objective = r.objective;
        out.iterations = r.iterations;
        out.note = r.stop_reason;
        if (!std::isfinite(r.objective)) {
          out.failed = true;
          out.note = "diverged";
        } else if (at_bound(bounds.rho, r.params.rho) || at_bound(bounds.alpha, r.params.alpha) ||
                   at_bound(bounds.beta, r.params.beta) ||
                   at_bound(bounds.delta, r.params.delta)) {
          out.failed = true;
          out.note = "hit a bound (" + r.stop_reason + ")";
        }
      } catch (const std::exception& e) {
        out.failed = true;
        out.objective = std::numeric_limits<double>::infinity();
        out.note = e.what();
      }
      return out;
    }));
  }

  FitReport report;
  report.method = method;
  report.alpha_identifiable = alpha_identifiable;
  for (auto& f : pending) report.starts.push_back(f.get());
  report.starts_tried = report.starts.size();

  // Lowest objective wins; ties go to the earliest start.
  std::size_t best = report.starts.size();
  bool all_failed = true;
  for (std::size_t i = 0; i < report.starts.size(); ++i) {
    const StartOutcome& s = report.starts[i];
    if (!s.failed) all_failed = false;
    if (!std::isfinite(s.objective)) continue;
    if (best == report.starts.size() || s.objective < report.starts[best].objective) best = i;
  }
  if (all_failed || best == report.starts.size()) {
    std::ostringstream msg;
    msg << "all " << report.starts.size() << " starts failed:";
    for (std::size_t i = 0; i < report.starts.size(); ++i) {
      msg << "\n  start " << i << ": " << report.starts[i].note;
    }
    throw EstimationError(msg.str());
  }
  report.params = report.starts[best].result;
  report.objective = report.starts[best].objective;
  report.residual_mse = report.objective / static_cast<double>(rates.size());
  report.rates = std::move(rates);
  return report;
}

namespace {

// Below this coefficient of variation of the positive budgets, rho b^alpha
// collapses to a single free constant.
constexpr double kIdentifiableVariation = 1e-3;

}  // namespace

FitReport fit_gvw(const EstimationProblem& problem) {
  problem.validate();
  if (problem.data.size() < 10) throw DomainError("fit_gvw needs >= 10 samples");
  TrainReport trained;
  try {
    trained = lm_train(problem.surrogate_spec, problem.data, problem.train_config);
  } catch (const NumericError& e) {
    throw EstimationError(std::string("surrogate training failed: ") + e.what());
  }
  auto rates = surrogate_rates(trained.surrogate, problem.data);
  const bool identifiable = budget_variation(problem.data) >= kIdentifiableVariation;
  FitReport report = fit_rates(std::move(rates), problem, identifiable, "dnn");
  report.surrogate_report = std::move(trained);
  return report;
}

FitReport fit_gvw_fd(const EstimationProblem& problem) {
  problem.validate();
  if (problem.data.size() < 3) throw DomainError("fit_gvw_fd needs >= 3 samples");
  const bool identifiable = budget_variation(problem.data) >= kIdentifiableVariation;
  return fit_rates(finite_difference_rates(problem.data), problem, identifiable, "fd");
}

nlohmann::json to_json(const FitReport& report) {
  nlohmann::json doc;
  doc["rho"] = report.params.rho;
  doc["alpha"] = report.alpha_identifiable ? nlohmann::json(report.params.alpha) : nlohmann::json();
  doc["beta"] = report.params.beta;
  doc["delta"] = report.params.delta;
  doc["mse"] = report.residual_mse;
  doc["method"] = report.method;
  doc["starts"] = report.starts_tried;
  doc["alpha_identifiable"] = report.alpha_identifiable;
  if (report.surrogate_report) {
    const TrainReport& t = *report.surrogate_report;
    doc["surrogate"] = {
        {"spec",
         {{"input_width", t.surrogate.spec.input_width},
          {"hidden_widths", t.surrogate.spec.hidden_widths},
          {"output_width", t.surrogate.spec.output_width}}},
        {"best_epoch", t.best_epoch},
        {"val_mse", t.best_val_mse},
        {"epochs_run", t.epochs_run},
        {"train_mse", t.train_mse.empty() ? 0.0 : t.train_mse[t.best_epoch]},
    };
  } else {
    doc["surrogate"] = nullptr;
  }
  nlohmann::json starts = nlohmann::json::array();
  for (const StartOutcome& s : report.starts) {
    starts.push_back({{"start", {s.start.rho, s.start.alpha, s.start.beta, s.start.delta}},
                      {"result", {s.result.rho, s.result.alpha, s.result.beta, s.result.delta}},
                      {"objective", std::isfinite(s.objective) ? nlohmann::json(s.objective)
                                                               : nlohmann::json()},
                      {"iterations", s.iterations},
                      {"failed", s.failed},
                      {"note", s.note}});
  }
  doc["per_start"] = starts;
  return doc;
}

}  // namespace gvw
