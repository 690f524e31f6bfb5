#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gvw/data_io.hpp"
#include "gvw/dynamics.hpp"
#include "gvw/econbase.hpp"
#include "gvw/error.hpp"
#include "gvw/estimator.hpp"
#include "gvw/sensitivity.hpp"
#include "gvw/steady_state.hpp"
#include "gvw/svg.hpp"

namespace {

using namespace gvw;

// Invalid flag values discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string format = "csv";
  std::string output;
  std::uint64_t seed = 1;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("GVW_SEED");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw UsageError(std::string("GVW_SEED is not an integer: ") + env);
  return v;
}

void add_common(CLI::App* cmd, Common& c, std::vector<std::string> formats) {
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember(std::move(formats)))
      ->capture_default_str();
  cmd->add_option("-o,--output", c.output, "Output file (default: standard output)");
  cmd->add_option("--seed", c.seed, "Random seed (default: $GVW_SEED or 1)");
}

void add_params(CLI::App* cmd, GvwParams& p, bool required) {
  auto* rho = cmd->add_option("--rho", p.rho, "Advertising effectiveness");
  auto* alpha = cmd->add_option("--alpha", p.alpha, "Ad elasticity");
  auto* beta = cmd->add_option("--beta", p.beta, "WoM index");
  auto* delta = cmd->add_option("--delta", p.delta, "Decay index");
  for (auto* o : {rho, alpha, beta, delta}) {
    if (required) {
      o->required();
    } else {
      o->capture_default_str();
    }
  }
}

void check_params(const GvwParams& p) {
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

std::string csv_num(double v) { return format_double(v); }

void emit(const Common& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw DataError("cannot open " + c.output + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + c.output);
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) {
    throw UsageError("budget grid needs 0 < b-min < b-max and at least 2 points");
  }
  std::vector<double> grid;
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid.push_back(lo * std::exp(step * i));
  grid.back() = hi;
  return grid;
}

std::vector<double> uniform_grid(double t_end, int n) {
  if (n < 2) throw UsageError("--n must be >= 2");
  if (!(t_end > 0.0)) throw UsageError("--t-end must be > 0");
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(t_end * i / (n - 1));
  return t;
}

BudgetPattern parse_pattern(const std::string& text) {
  try {
    return parse_budget_pattern(text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  GvwParams params;
  std::string budget;
  double t_end = 100.0;
  int n = 101;
  double x0 = 0.0;
  double noise = 0.0;
};

void run_simulate(const SimulateArgs& a) {
  check_params(a.params);
  if (a.n < 2) throw UsageError("--n must be >= 2");
  if (!(a.t_end > 0.0)) throw UsageError("--t-end must be > 0");
  if (!(a.noise >= 0.0)) throw UsageError("--noise must be >= 0");
  if (!(a.x0 >= 0.0 && a.x0 <= 1.0)) throw UsageError("--x0 must lie in [0, 1]");
  SyntheticSpec spec;
  spec.true_params = a.params;
  spec.budget = parse_pattern(a.budget);
  spec.n_samples = static_cast<std::size_t>(a.n);
  spec.t_end = a.t_end;
  spec.noise_sigma = a.noise;
  spec.seed = a.common.seed;
  spec.x0 = a.x0;
  const Trajectory traj = generate_synthetic(spec);

  if (a.common.format == "json") {
    emit(a.common, dump(to_json(traj)));
  } else if (a.common.format == "svg") {
    emit(a.common, render_svg({"Simulated market share", "t", "share",
                               {{"share", traj.times(), traj.shares()}}}));
  } else {
    std::ostringstream out;
    write_csv(out, to_records(traj));
    emit(a.common, out.str());
  }
}

// pulse ----------------------------------------------------------------------

struct PulseArgs {
  Common common;
  GvwParams params;
  PulseSpec pulse;
  double t_end = 0.0;
  int n = 201;
};

void run_pulse(const PulseArgs& a) {
  check_params(a.params);
  try {
    a.pulse.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const double horizon = a.t_end > 0.0 ? a.t_end : 2.0 * a.pulse.t_end;
  const auto times = uniform_grid(horizon, a.n);

  const QuadraticReduction q = taylor_reduce(a.params, a.pulse.b0);
  const QuadraticReduction decay{0.0, -a.params.delta, 0.0, 0.0};
  const double x_at_end = integrate_quadratic(q, a.pulse.x0, a.pulse.t_end);
  std::vector<double> closed, integrated, diff;
  double worst = 0.0;
  for (double t : times) {
    const double xc = pulse_response(a.params, a.pulse, t);
    const double xi = t <= a.pulse.t_end
                          ? integrate_quadratic(q, a.pulse.x0, t)
                          : integrate_quadratic(decay, x_at_end, t - a.pulse.t_end);
    closed.push_back(xc);
    integrated.push_back(xi);
    diff.push_back(std::abs(xc - xi));
    worst = std::max(worst, diff.back());
  }
  std::fprintf(stderr, "max_abs_diff=%s\n", csv_num(worst).c_str());

  if (a.common.format == "json") {
    emit(a.common, dump({{"t", times},
                         {"x_closed_form", closed},
                         {"x_integrated", integrated},
                         {"abs_diff", diff},
                         {"max_abs_diff", worst}}));
  } else if (a.common.format == "svg") {
    emit(a.common, render_svg({"Response to a rectangular pulse", "t", "share",
                               {{"closed form", times, closed}, {"integrated", times, integrated}}}));
  } else {
    std::string out = "t,x_closed_form,x_integrated,abs_diff\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
      out += csv_num(times[i]) + ',' + csv_num(closed[i]) + ',' + csv_num(integrated[i]) + ',' +
             csv_num(diff[i]) + '\n';
    }
    emit(a.common, out);
  }
}

// fit ------------------------------------------------------------------------

struct FitArgs {
  Common common;
  std::string input;
  std::string method = "dnn";
  double market_potential = 0.0;
  int starts = 16;
  std::vector<std::size_t> hidden{32, 32};
  int restarts = 4;
  int max_epochs = 1000;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Trajectory read_trajectory(const std::string& path, double market_potential) {
  if (ends_with(path, ".json")) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
      return trajectory_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  const auto records = load_csv(path);
  NormalizationConfig config;
  config.market_potential =
      market_potential > 0.0 ? market_potential : default_market_potential(records);
  return normalize(records, config);
}

void run_fit(const FitArgs& a) {
  if (a.starts < 1) throw UsageError("--starts must be >= 1");
  if (a.restarts < 1) throw UsageError("--restarts must be >= 1");
  if (a.max_epochs < 1) throw UsageError("--max-epochs must be >= 1");
  if (a.market_potential < 0.0) throw UsageError("--market-potential must be > 0");

  EstimationProblem problem;
  problem.data = read_trajectory(a.input, a.market_potential);
  problem.multistart_count = a.starts;
  problem.seed = a.common.seed;
  problem.surrogate_spec.hidden_widths = a.hidden;
  problem.train_config.seed = a.common.seed;
  problem.train_config.restarts = a.restarts;
  problem.train_config.max_epochs = a.max_epochs;
  try {
    problem.surrogate_spec.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }

  const FitReport report = a.method == "fd" ? fit_gvw_fd(problem) : fit_gvw(problem);
  const GvwParams& p = report.params;
  std::fprintf(stderr, "%-12s %-12s %-12s %-12s %-12s\n", "rho", "alpha", "beta", "delta", "MSE");
  std::fprintf(stderr, "%-12.4e %-12s %-12.4f %-12.4e %-12.3e\n", p.rho,
               report.alpha_identifiable ? std::to_string(p.alpha).c_str() : "n/a", p.beta,
               p.delta, report.residual_mse);

  if (a.common.format == "json") {
    emit(a.common, dump(to_json(report)));
  } else if (a.common.format == "svg") {
    std::vector<double> t, observed, model;
    for (const RatePoint& r : report.rates) {
      t.push_back(r.t);
      observed.push_back(r.rate);
      model.push_back(response_rate(p, r.budget, r.share));
    }
    emit(a.common, render_svg({"Share rate: data vs fitted model", "t", "dx/dt",
                               {{"data (" + report.method + ")", t, observed},
                                {"fitted", t, model}}}));
  } else {
    emit(a.common, "rho,alpha,beta,delta,mse,method\n" + csv_num(p.rho) + ',' +
                       (report.alpha_identifiable ? csv_num(p.alpha) : std::string()) + ',' +
                       csv_num(p.beta) + ',' + csv_num(p.delta) + ',' +
                       csv_num(report.residual_mse) + ',' + report.method + '\n');
  }
}

// steady ---------------------------------------------------------------------

struct GridArgs {
  double b_min = 0.01;
  double b_max = 100.0;
  int points = 41;
};

void add_grid(CLI::App* cmd, GridArgs& g) {
  cmd->add_option("--b-min", g.b_min, "Smallest budget of the log grid")->capture_default_str();
  cmd->add_option("--b-max", g.b_max, "Largest budget of the log grid")->capture_default_str();
  cmd->add_option("--points", g.points, "Grid points")->capture_default_str();
}

struct SteadyArgs {
  Common common;
  GvwParams params;
  GridArgs grid;
};

void run_steady(const SteadyArgs& a) {
  check_params(a.params);
  const auto budgets = log_grid(a.grid.b_min, a.grid.b_max, a.grid.points);
  const double x_tilde = elasticity_threshold(a.params);
  std::vector<double> shares, roundtrip;
  for (double b : budgets) {
    const double x = steady_share(a.params, b);
    shares.push_back(x);
    roundtrip.push_back(std::abs(steady_budget(a.params, x) - b) / b);
  }
  std::fprintf(stderr, "x_tilde=%s\n", csv_num(x_tilde).c_str());

  if (a.common.format == "json") {
    emit(a.common, dump({{"b_bar", budgets},
                         {"x_bar", shares},
                         {"roundtrip_rel_err", roundtrip},
                         {"x_tilde", x_tilde}}));
  } else if (a.common.format == "svg") {
    std::vector<double> lb;
    for (double b : budgets) lb.push_back(std::log10(b));
    emit(a.common, render_svg({"Steady-state response", "log10 budget", "steady share",
                               {{"steady share", lb, shares}}}));
  } else {
    std::string out = "b_bar,x_bar,roundtrip_rel_err\n";
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      out += csv_num(budgets[i]) + ',' + csv_num(shares[i]) + ',' + csv_num(roundtrip[i]) + '\n';
    }
    emit(a.common, out);
  }
}

// sensitivity ----------------------------------------------------------------

struct SensitivityArgs {
  Common common;
  GvwParams params;
  std::string vary = "alpha";
  std::vector<double> values{0.3, 0.5, 0.7, 1.0};
  GridArgs grid;
};

void run_sensitivity(const SensitivityArgs& a) {
  check_params(a.params);
  const SweepIndex index = parse_sweep_index(a.vary);
  for (double v : a.values) {
    GvwParams p = a.params;
    (index == SweepIndex::alpha ? p.alpha : p.beta) = v;
    check_params(p);
  }
  const auto budgets = log_grid(a.grid.b_min, a.grid.b_max, a.grid.points);
  const auto curves = sensitivity_sweep(a.params, index, a.values, budgets);

  std::vector<std::string> labels;
  for (const SweepCurve& c : curves) {
    if (c.error) throw NumericError(a.vary + "=" + csv_num(c.value) + ": " + *c.error);
    labels.emplace_back(to_string(classify_shape(c.budgets, c.shares)));
    std::fprintf(stderr, "%s=%s %s\n", a.vary.c_str(), csv_num(c.value).c_str(),
                 labels.back().c_str());
  }

  if (a.common.format == "json") {
    nlohmann::json doc = {{"vary", a.vary}, {"base", {{"rho", a.params.rho},
                                                      {"alpha", a.params.alpha},
                                                      {"beta", a.params.beta},
                                                      {"delta", a.params.delta}}}};
    doc["curves"] = nlohmann::json::array();
    for (std::size_t i = 0; i < curves.size(); ++i) {
      doc["curves"].push_back({{"value", curves[i].value},
                               {"shape", labels[i]},
                               {"budget", curves[i].budgets},
                               {"share", curves[i].shares}});
    }
    emit(a.common, dump(doc));
  } else if (a.common.format == "svg") {
    PlotSpec plot{"Steady-state share vs budget", "log10 budget", "steady share", {}};
    for (std::size_t i = 0; i < curves.size(); ++i) {
      std::vector<double> lb;
      for (double b : curves[i].budgets) lb.push_back(std::log10(b));
      plot.series.push_back(
          {a.vary + "=" + csv_num(curves[i].value) + " (" + labels[i] + ")", lb, curves[i].shares});
    }
    emit(a.common, render_svg(plot));
  } else {
    std::string out = a.vary + ",budget,share,shape\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
      for (std::size_t j = 0; j < curves[i].budgets.size(); ++j) {
        out += csv_num(curves[i].value) + ',' + csv_num(curves[i].budgets[j]) + ',' +
               csv_num(curves[i].shares[j]) + ',' + labels[i] + '\n';
      }
    }
    emit(a.common, out);
  }
}

// compare --------------------------------------------------------------------

struct CompareArgs {
  Common common;
  GvwParams params;
  EconParams econ;
  std::string econ_data;
  double market_potential = 0.0;
  CompareScenario scenario;
  GridArgs grid;
};

void run_compare(CompareArgs a) {
  check_params(a.params);
  if (!a.econ_data.empty()) {
    const OlsFit fit = fit_ols(read_trajectory(a.econ_data, a.market_potential));
    a.econ = fit.params;
    std::fprintf(stderr, "econbase fit: c0=%s c1=%s c2=%s\n", csv_num(a.econ.c0).c_str(),
                 csv_num(a.econ.c1).c_str(), csv_num(a.econ.c2).c_str());
  }
  try {
    a.econ.validate();
    a.scenario.budget_grid = log_grid(a.grid.b_min, a.grid.b_max, a.grid.points);
    a.scenario.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const ModelComparison c = compare_models(a.params, a.econ, a.scenario);
  std::fprintf(stderr, "diminishing returns: gvw=%s econ=%s; saturation: gvw=%s econ=%s\n",
               to_string(c.gvw_curvature).c_str(), to_string(c.econ_curvature).c_str(),
               c.gvw_saturates ? "bounded" : "unbounded",
               c.econ_saturates ? "bounded" : "unbounded");

  if (a.common.format == "json") {
    nlohmann::json doc = to_json(c);
    doc["gvw_params"] = {{"rho", a.params.rho},
                         {"alpha", a.params.alpha},
                         {"beta", a.params.beta},
                         {"delta", a.params.delta}};
    doc["econ_params"] = to_json(a.econ);
    emit(a.common, dump(doc));
  } else if (a.common.format == "svg") {
    emit(a.common, render_svg({"Pulse response: GVW vs Econbase", "t", "share",
                               {{"GVW", c.times, c.gvw_pulse}, {"Econbase", c.times, c.econ_pulse}}}));
  } else {
    std::string out = "section,x,gvw,econ\n";
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      out += "pulse," + csv_num(c.times[i]) + ',' + csv_num(c.gvw_pulse[i]) + ',' +
             csv_num(c.econ_pulse[i]) + '\n';
    }
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
      out += "steady," + csv_num(c.budgets[i]) + ',' + csv_num(c.gvw_steady[i]) + ',' +
             csv_num(c.econ_steady[i]) + '\n';
    }
    emit(a.common, out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Vidale-Wolfe advertising response model"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  try {
    seed = default_seed();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  SimulateArgs sim;
  sim.common.seed = seed;
  auto* c_sim = app.add_subcommand("simulate", "Simulate the GVW dynamics under a budget pattern");
  add_params(c_sim, sim.params, true);
  add_common(c_sim, sim.common, {"csv", "json", "svg"});
  c_sim->add_option("--budget", sim.budget,
                    "const:L | pulse:L1,L2,...:ON:OFF[:OFF_LEVEL] | walk:MIN:MAX:STEP:HOLD")
      ->required();
  c_sim->add_option("--t-end", sim.t_end, "Final time")->capture_default_str();
  c_sim->add_option("--n", sim.n, "Number of samples")->capture_default_str();
  c_sim->add_option("--x0", sim.x0, "Initial share")->capture_default_str();
  c_sim->add_option("--noise", sim.noise, "Std of additive share noise")->capture_default_str();

  PulseArgs pulse;
  pulse.common.seed = seed;
  auto* c_pulse = app.add_subcommand("pulse", "Closed-form pulse response vs RK4 integration");
  add_params(c_pulse, pulse.params, true);
  add_common(c_pulse, pulse.common, {"csv", "json", "svg"});
  c_pulse->add_option("--b0", pulse.pulse.b0, "Pulse budget level")->capture_default_str();
  c_pulse->add_option("--pulse-end", pulse.pulse.t_end, "Time the pulse stops")
      ->capture_default_str();
  c_pulse->add_option("--x0", pulse.pulse.x0, "Initial share")->capture_default_str();
  c_pulse->add_option("--t-end", pulse.t_end, "Final time (default: twice the pulse end)");
  c_pulse->add_option("--n", pulse.n, "Number of samples")->capture_default_str();

  FitArgs fit;
  fit.common.seed = seed;
  auto* c_fit = app.add_subcommand("fit", "Estimate (rho, alpha, beta, delta) from a trajectory");
  add_common(c_fit, fit.common, {"csv", "json", "svg"});
  c_fit->add_option("-i,--input", fit.input, "CSV (t,budget,response) or trajectory JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_fit->add_option("--method", fit.method, "dnn or fd")
      ->check(CLI::IsMember({"dnn", "fd"}))
      ->capture_default_str();
  c_fit->add_option("--market-potential", fit.market_potential,
                    "Divisor from response to share (default: 1.05 x max response)");
  c_fit->add_option("--starts", fit.starts, "Multistart count")->capture_default_str();
  c_fit->add_option("--hidden", fit.hidden, "Hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  c_fit->add_option("--restarts", fit.restarts, "Surrogate training restarts")
      ->capture_default_str();
  c_fit->add_option("--max-epochs", fit.max_epochs, "Surrogate epoch cap")->capture_default_str();

  SteadyArgs steady;
  steady.common.seed = seed;
  auto* c_steady = app.add_subcommand("steady", "Steady-state curve and elasticity threshold");
  add_params(c_steady, steady.params, true);
  add_common(c_steady, steady.common, {"csv", "json", "svg"});
  add_grid(c_steady, steady.grid);

  SensitivityArgs sens;
  sens.common.seed = seed;
  sens.params = {0.10, 1.0, 1.0, 0.01};
  auto* c_sens = app.add_subcommand("sensitivity", "Sweep alpha or beta and classify curve shapes");
  add_params(c_sens, sens.params, false);
  add_common(c_sens, sens.common, {"csv", "json", "svg"});
  add_grid(c_sens, sens.grid);
  c_sens->add_option("--vary", sens.vary, "alpha or beta")
      ->check(CLI::IsMember({"alpha", "beta"}))
      ->capture_default_str();
  c_sens->add_option("--values", sens.values, "Sweep values")
      ->delimiter(',')
      ->capture_default_str();

  CompareArgs cmp;
  cmp.common.seed = seed;
  cmp.scenario.pulse = {1.0, 20.0, 0.0};
  auto* c_cmp = app.add_subcommand("compare", "Compare GVW with the Econbase model");
  add_params(c_cmp, cmp.params, true);
  add_common(c_cmp, cmp.common, {"csv", "json", "svg"});
  add_grid(c_cmp, cmp.grid);
  auto* c0 = c_cmp->add_option("--c0", cmp.econ.c0, "Econbase constant");
  auto* c1 = c_cmp->add_option("--c1", cmp.econ.c1, "Econbase carryover coefficient");
  auto* c2 = c_cmp->add_option("--c2", cmp.econ.c2, "Econbase advertising coefficient");
  auto* econ_data = c_cmp->add_option("--econ-data", cmp.econ_data,
                                      "Fit Econbase by OLS on this trajectory instead")
                        ->check(CLI::ExistingFile);
  for (auto* o : {c0, c1, c2}) o->excludes(econ_data);
  c_cmp->add_option("--market-potential", cmp.market_potential,
                    "Divisor for --econ-data CSV (default: 1.05 x max response)");
  c_cmp->add_option("--b0", cmp.scenario.pulse.b0, "Pulse budget level")->capture_default_str();
  c_cmp->add_option("--pulse-end", cmp.scenario.pulse.t_end, "Time the pulse stops")
      ->capture_default_str();
  c_cmp->add_option("--x0", cmp.scenario.pulse.x0, "Initial share")->capture_default_str();
  c_cmp->add_option("--horizon", cmp.scenario.horizon, "Last time step")->capture_default_str();
  c_cmp->add_option("--floor-budget", cmp.scenario.floor_budget,
                    "Econbase budget after cessation")
      ->capture_default_str();
  c_cmp->add_option("--econ-initial", cmp.scenario.econ_initial,
                    "Econbase starting share when x0 is 0")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_sim) run_simulate(sim);
    if (*c_pulse) run_pulse(pulse);
    if (*c_fit) run_fit(fit);
    if (*c_steady) run_steady(steady);
    if (*c_sens) run_sensitivity(sens);
    if (*c_cmp) run_compare(cmp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
