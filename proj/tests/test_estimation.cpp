#include <cmath>
#include <doctest.h>
#include <vector>

#include "gvw/data_io.hpp"
#include "gvw/dynamics.hpp"
#include "gvw/error.hpp"
#include "gvw/estimator.hpp"

using namespace gvw;

namespace {

const GvwParams kTruth{0.1, 0.7, 0.8, 0.01};

Trajectory synthetic(double sigma, double time_factor = 1.0) {
  SyntheticSpec spec;
  spec.true_params = kTruth;
  spec.budget = parse_budget_pattern("pulse:1,3:25:25");
  spec.t_end = 100.0;
  spec.n_samples = 200;
  spec.noise_sigma = sigma;
  spec.seed = 11;
  Trajectory tr = generate_synthetic(spec);
  for (auto& s : tr.samples) s.t *= time_factor;
  return tr;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::vector<RatePoint> exact_rates(const GvwParams& p) {
  std::vector<RatePoint> r;
  for (int i = 0; i < 30; ++i) {
    const double b = 0.5 + 0.1 * (i % 7);
    const double x = 0.02 * i;
    r.push_back({double(i), response_rate(p, b, x), x, b});
  }
  return r;
}

}  // namespace

TEST_CASE("rate_residuals") {
  const auto rates = exact_rates(kTruth);
  CHECK(rate_residuals(kTruth, rates).cwiseAbs().maxCoeff() < 1e-15);

  SUBCASE("zero budget isolates the decay term") {
    std::vector<RatePoint> r{{0, 0.3, 0.4, 0.0}, {1, -0.1, 0.2, 0.0}};
    for (const GvwParams& p : {GvwParams{0.1, 0.5, 0.3, 0.02}, GvwParams{5, 1.9, 1.7, 0.02}}) {
      const auto res = rate_residuals(p, r);
      CHECK(res[0] == doctest::Approx(0.3 + 0.02 * 0.4));
      CHECK(res[1] == doctest::Approx(-0.1 + 0.02 * 0.2));
    }
  }
  SUBCASE("one percent rho perturbation") {
    GvwParams p = kTruth;
    p.rho *= 1.01;
    const auto res = rate_residuals(p, rates);
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double effort = kTruth.rho * std::pow(rates[i].budget, kTruth.alpha) *
                            std::pow(1 - rates[i].share, kTruth.beta);
      CHECK(res[static_cast<Eigen::Index>(i)] == doctest::Approx(-0.01 * effort).epsilon(1e-9));
    }
  }
  SUBCASE("analytic jacobian matches finite differences") {
    const GvwParams p{0.2, 0.9, 1.1, 0.03};
    const auto j = rate_residual_jacobian(p, rates);
    const double h = 1e-7;
    for (int c = 0; c < 4; ++c) {
      GvwParams hi = p, lo = p;
      double* fields_hi[] = {&hi.rho, &hi.alpha, &hi.beta, &hi.delta};
      double* fields_lo[] = {&lo.rho, &lo.alpha, &lo.beta, &lo.delta};
      *fields_hi[c] += h;
      *fields_lo[c] -= h;
      const Eigen::VectorXd fd = (rate_residuals(hi, rates) - rate_residuals(lo, rates)) / (2 * h);
      CHECK((j.col(c) - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("domain errors") {
    std::vector<RatePoint> bad{{0, 0.1, 1.2, 1.0}};
    CHECK_THROWS_AS(rate_residuals(kTruth, bad), DomainError);
    bad = {{0, 0.1, 0.2, -1.0}};
    CHECK_THROWS_AS(rate_residuals(kTruth, bad), DomainError);
  }
}

TEST_CASE("nls_solve") {
  const auto rates = exact_rates(kTruth);
  const ResidualFn f = [&](const GvwParams& p) { return rate_residuals(p, rates); };

  SUBCASE("start at the optimum") {
    const auto r = nls_solve(f, kTruth, GvwBounds{});
    CHECK(r.params == kTruth);
    CHECK(r.objective < 1e-28);
  }
  SUBCASE("quadratic in rho only") {
    const ResidualFn quad = [](const GvwParams& p) {
      Eigen::VectorXd r(2);
      r << p.rho - 0.3, 2 * (p.rho - 0.3);
      return r;
    };
    const auto r = nls_solve(quad, {2.0, 1, 1, 0}, GvwBounds{});
    CHECK(r.params.rho == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(r.iterations <= 5);
  }
  SUBCASE("objective history is monotone and bounds hold") {
    const auto r = nls_solve(f, {1.0, 1.5, 0.2, 0.3}, GvwBounds{});
    REQUIRE_FALSE(r.history.empty());
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.objective <= r.history.front());
    CHECK(GvwBounds{}.contains(r.params));
  }
  SUBCASE("non-finite start") {
    const ResidualFn nan = [](const GvwParams&) { return Eigen::VectorXd::Constant(3, NAN); };
    CHECK_THROWS_AS(nls_solve(nan, kTruth, GvwBounds{}), NumericError);
  }
}

TEST_CASE("latin hypercube starts") {
  const GvwBounds b;
  const auto s = latin_hypercube_starts(b, 16, 7);
  REQUIRE(s.size() == 16);
  for (const auto& p : s) CHECK(b.contains(p));
  const auto again = latin_hypercube_starts(b, 16, 7);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == again[i]);
  // One start per stratum in every coordinate.
  std::vector<int> hits(16, 0);
  for (const auto& p : s) ++hits[static_cast<std::size_t>((p.alpha - 0.05) / (1.95 / 16))];
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("finite_difference_rates") {
  SUBCASE("exact on affine shares") {
    Trajectory tr;
    for (int i = 0; i < 20; ++i) tr.samples.push_back({double(i), 1.0 + i, 0.01 * i});
    for (const auto& r : finite_difference_rates(tr)) CHECK(r.rate == doctest::Approx(0.01));
  }
  SUBCASE("never differences across a budget switch") {
    Trajectory tr;
    for (int i = 0; i < 12; ++i) {
      const double t = i;
      tr.samples.push_back({t, i < 6 ? 1.0 : 0.0, i < 6 ? 0.02 * t : 0.1 - 0.01 * (t - 5)});
    }
    const auto rates = finite_difference_rates(tr);
    CHECK(rates.size() == 12);
    for (const auto& r : rates) {
      CHECK(r.rate == doctest::Approx(r.budget > 0 ? 0.02 : -0.01));
    }
  }
  CHECK_THROWS(finite_difference_rates(Trajectory{{{0, 1, 0}, {1, 1, 0.1}}, {}}));
}

TEST_CASE("fit_gvw_fd recovers the generating parameters") {
  EstimationProblem prob;
  prob.data = synthetic(0.0);
  const FitReport r = fit_gvw_fd(prob);
  CHECK(rel(r.params.rho, kTruth.rho) < 0.05);
  CHECK(rel(r.params.alpha, kTruth.alpha) < 0.05);
  CHECK(rel(r.params.beta, kTruth.beta) < 0.05);
  CHECK(rel(r.params.delta, kTruth.delta) < 0.05);
  CHECK(r.method == "fd");
  CHECK(r.starts_tried == 16);
  CHECK(r.alpha_identifiable);
  for (const auto& s : r.starts) {
    if (!s.failed) CHECK(r.objective <= s.start_objective);
  }

  SUBCASE("noise raises the optimum") {
    EstimationProblem noisy = prob;
    noisy.data = synthetic(0.01);
    CHECK(fit_gvw_fd(noisy).objective > r.objective);
  }
  SUBCASE("time-unit covariance") {
    EstimationProblem slow = prob;
    slow.data = synthetic(0.0, 2.0);
    const FitReport s = fit_gvw_fd(slow);
    CHECK(rel(s.params.alpha, r.params.alpha) < 0.01);
    CHECK(rel(s.params.beta, r.params.beta) < 0.01);
    CHECK(rel(s.params.rho, r.params.rho / 2) < 0.01);
    CHECK(rel(s.params.delta, r.params.delta / 2) < 0.01);
  }
  SUBCASE("deterministic") {
    const FitReport again = fit_gvw_fd(prob);
    CHECK(again.params == r.params);
    CHECK(to_json(again).dump() == to_json(r).dump());
  }
}

TEST_CASE("constant budget leaves alpha unidentifiable") {
  SyntheticSpec spec;
  spec.true_params = kTruth;
  spec.budget = ConstantBudget{2.0};
  spec.n_samples = 100;
  EstimationProblem prob;
  prob.data = generate_synthetic(spec);
  const FitReport r = fit_gvw_fd(prob);
  CHECK_FALSE(r.alpha_identifiable);
  CHECK(to_json(r)["alpha"].is_null());
  CHECK(r.params.rho * std::pow(2.0, r.params.alpha) ==
        doctest::Approx(kTruth.rho * std::pow(2.0, kTruth.alpha)).epsilon(0.05));
}

TEST_CASE("fit failures are reported") {
  EstimationProblem prob;
  prob.data = synthetic(0.0);
  prob.bounds.beta = {1.5, 2.0};
  prob.bounds.delta = {0.5, 1.0};
  prob.multistart_count = 4;
  CHECK_THROWS_AS(fit_gvw_fd(prob), EstimationError);

  EstimationProblem tiny;
  tiny.data.samples = {{0, 1, 0.1}, {1, 2, 0.2}, {2, 1, 0.3}};
  CHECK_THROWS_AS(fit_gvw(tiny), DomainError);

  EstimationProblem zero_starts;
  zero_starts.data = synthetic(0.0);
  zero_starts.multistart_count = 0;
  CHECK_THROWS_AS(fit_gvw_fd(zero_starts), DomainError);
}

TEST_CASE("surrogate pipeline") {
  EstimationProblem prob;
  prob.data = synthetic(0.0);
  prob.surrogate_spec = {1, {8, 16}, 1};
  prob.train_config.restarts = 1;
  prob.train_config.max_epochs = 300;
  prob.multistart_count = 4;
  const FitReport r = fit_gvw(prob);
  CHECK(rel(r.params.alpha, kTruth.alpha) < 0.3);
  CHECK(r.method == "dnn");
  REQUIRE(r.surrogate_report);
  CHECK(r.surrogate_report->epochs_run <= 300);
  CHECK(r.rates.size() == prob.data.size());
  const auto doc = to_json(r);
  for (const char* key : {"rho", "alpha", "beta", "delta", "mse", "method", "starts", "surrogate"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc["surrogate"].contains("best_epoch"));
  CHECK(doc["surrogate"].contains("val_mse"));
}

TEST_CASE("an undertrained surrogate fails loudly") {
  EstimationProblem prob;
  prob.data = synthetic(0.0);
  prob.surrogate_spec = {1, {4, 8}, 1};
  prob.train_config.restarts = 1;
  prob.train_config.max_epochs = 5;
  prob.multistart_count = 4;
  try {
    const FitReport r = fit_gvw(prob);
    CHECK(r.starts_tried == 4);
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("start 0") != std::string::npos);
  }
}
