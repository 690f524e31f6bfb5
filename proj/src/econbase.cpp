#include "gvw/econbase.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>
#include <limits>

#include "gvw/dynamics.hpp"
#include "gvw/error.hpp"
#include "gvw/steady_state.hpp"

namespace gvw {

void EconParams::validate() const {
  if (!(c0 > 0.0 && std::isfinite(c0))) throw DomainError("c0 must be finite and > 0");
  if (!std::isfinite(c1) || !std::isfinite(c2)) throw DomainError("c1 and c2 must be finite");
}

OlsFit fit_ols(const Trajectory& data) {
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = data.samples[i];
    if (!(s.share > 0.0) || !(s.budget > 0.0)) {
      throw DataError("row " + std::to_string(i + 1) +
                      ": share and budget must be > 0 for the log model");
    }
  }
  if (n < 5) throw DataError("need at least 4 rows after lagging, got " +
                             std::to_string(n == 0 ? 0 : n - 1));

  const auto rows = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd x(rows, 3);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto i = static_cast<std::size_t>(r) + 1;
    x(r, 0) = 1.0;
    x(r, 1) = std::log(data.samples[i - 1].share);
    x(r, 2) = std::log(data.samples[i].budget);
    y[r] = std::log(data.samples[i].share);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3) {
    throw NumericError("rank-deficient regressors: intercept, lagged log share and log budget "
                       "are collinear");
  }

  const Eigen::MatrixXd normal = x.transpose() * x;
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(normal).eigenvalues();
  OlsFit fit;
  fit.condition_number = eig.minCoeff() > 0.0 ? eig.maxCoeff() / eig.minCoeff()
                                              : std::numeric_limits<double>::infinity();
  Eigen::VectorXd coef;
  if (fit.condition_number > 1e12) {
    fit.pseudo_inverse = true;
    coef = x.completeOrthogonalDecomposition().pseudoInverse() * y;
  } else {
    coef = normal.ldlt().solve(x.transpose() * y);
  }
  if (!coef.allFinite()) throw NumericError("OLS produced non-finite coefficients");

  fit.params = {std::exp(coef[0]), coef[1], coef[2]};
  const Eigen::VectorXd resid = y - x * coef;
  fit.residuals.assign(resid.data(), resid.data() + resid.size());
  return fit;
}

double predict_econ(const EconParams& params, double s_prev, double budget) {
  params.validate();
  if (!(s_prev > 0.0) || !(budget > 0.0)) {
    throw DomainError("Econbase prediction needs positive lagged sales and budget");
  }
  return params.c0 * std::pow(s_prev, params.c1) * std::pow(budget, params.c2);
}

double steady_state_econ(const EconParams& params, double b_bar) {
  params.validate();
  if (!(params.c1 < 1.0)) throw DomainError("no steady state: c1 must be < 1");
  if (!(b_bar > 0.0)) throw DomainError("steady budget must be > 0");
  return std::pow(params.c0 * std::pow(b_bar, params.c2), 1.0 / (1.0 - params.c1));
}

double econ_steady_exponent(const EconParams& params) {
  params.validate();
  if (!(params.c1 < 1.0)) throw DomainError("no steady state: c1 must be < 1");
  return params.c2 / (1.0 - params.c1);
}

void CompareScenario::validate() const {
  pulse.validate();
  if (!(pulse.b0 > 0.0)) throw DomainError("comparison pulse level must be > 0");
  if (!(horizon > pulse.t_end + 1.0)) {
    throw DomainError("horizon must extend at least two steps past the pulse end");
  }
  if (!(floor_budget > 0.0)) throw DomainError("floor budget must be > 0");
  if (!(econ_initial > 0.0)) throw DomainError("Econbase initial share must be > 0");
  if (budget_grid.size() < 3) throw DomainError("budget grid needs at least 3 points");
  for (std::size_t i = 0; i < budget_grid.size(); ++i) {
    if (!(budget_grid[i] > 0.0) || (i > 0 && !(budget_grid[i] > budget_grid[i - 1]))) {
      throw DomainError("budget grid must be positive and strictly increasing");
    }
  }
}

std::string to_string(Curvature c) {
  switch (c) {
    case Curvature::diminishing: return "diminishing";
    case Curvature::constant: return "constant";
    case Curvature::increasing: return "increasing";
    case Curvature::mixed: return "mixed";
  }
  return "mixed";
}

Curvature curvature(const std::vector<double>& x, const std::vector<double>& y, double tol) {
  if (x.size() != y.size() || x.size() < 3) {
    throw DomainError("curvature needs equal-length series of at least 3 points");
  }
  std::vector<double> slope;
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    slope.push_back((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
    scale = std::max(scale, std::abs(slope.back()));
  }
  const double eps = tol * std::max(scale, 1e-300);
  bool down = false, up = false;
  for (std::size_t i = 0; i + 1 < slope.size(); ++i) {
    const double d = slope[i + 1] - slope[i];
    if (d < -eps) down = true;
    if (d > eps) up = true;
  }
  if (down && up) return Curvature::mixed;
  if (down) return Curvature::diminishing;
  if (up) return Curvature::increasing;
  return Curvature::constant;
}

namespace {

double decay_rate(const std::vector<double>& times, const std::vector<double>& y,
                  double t_end) {
  std::size_t first = 0;
  while (first < times.size() && times[first] < t_end) ++first;
  const std::size_t last = times.size() - 1;
  if (first >= last || !(y[first] > 0.0) || !(y[last] > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return (std::log(y[first]) - std::log(y[last])) / (times[last] - times[first]);
}

}  // namespace

ModelComparison compare_models(const GvwParams& gvw, const EconParams& econ,
                               const CompareScenario& scenario) {
  gvw.validate();
  econ.validate();
  scenario.validate();

  ModelComparison out;
  const PulseSpec& pulse = scenario.pulse;
  double s = pulse.x0 > 0.0 ? pulse.x0 : scenario.econ_initial;
  for (int k = 0; k <= scenario.horizon; ++k) {
    const double t = k;
    out.times.push_back(t);
    out.gvw_pulse.push_back(pulse_response(gvw, pulse, t));
    if (k > 0) s = predict_econ(econ, s, t <= pulse.t_end ? pulse.b0 : scenario.floor_budget);
    out.econ_pulse.push_back(s);
  }
  out.gvw_decay_rate = decay_rate(out.times, out.gvw_pulse, pulse.t_end);
  out.econ_decay_rate = decay_rate(out.times, out.econ_pulse, pulse.t_end);

  out.budgets = scenario.budget_grid;
  for (double b : out.budgets) {
    out.gvw_steady.push_back(steady_share(gvw, b));
    out.econ_steady.push_back(steady_state_econ(econ, b));
  }
  out.gvw_curvature = curvature(out.budgets, out.gvw_steady);
  out.econ_curvature = curvature(out.budgets, out.econ_steady);
  out.econ_exponent = econ_steady_exponent(econ);

  out.gvw_saturates = true;
  out.gvw_bound = 1.0;
  out.econ_saturates = !(econ.c2 > 0.0);
  return out;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EconParams& params) {
  return {{"c0", params.c0}, {"c1", params.c1}, {"c2", params.c2}};
}

nlohmann::json to_json(const ModelComparison& c) {
  return {
      {"decay_after_cessation",
       {{"t", c.times},
        {"gvw", c.gvw_pulse},
        {"econ", c.econ_pulse},
        {"gvw_decay_rate", number_or_null(c.gvw_decay_rate)},
        {"econ_decay_rate", number_or_null(c.econ_decay_rate)}}},
      {"steady_state",
       {{"budget", c.budgets}, {"gvw", c.gvw_steady}, {"econ", c.econ_steady}}},
      {"diminishing_returns",
       {{"gvw", to_string(c.gvw_curvature)},
        {"econ", to_string(c.econ_curvature)},
        {"econ_exponent", number_or_null(c.econ_exponent)}}},
      {"saturation",
       {{"gvw_saturates", c.gvw_saturates},
        {"gvw_bound", c.gvw_bound},
        {"econ_saturates", c.econ_saturates}}},
  };
}

}  // namespace gvw
