#include "gvw/surrogate.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <optional>

#include "gvw/error.hpp"
#include "gvw/lm.hpp"

namespace gvw {

void TrainConfig::validate() const {
  if (!(lm_initial > 0.0)) throw DomainError("lm_initial must be > 0");
  if (!(lm_increase > 1.0)) throw DomainError("lm_increase must be > 1");
  if (!(lm_decrease > 0.0 && lm_decrease < 1.0)) {
    throw DomainError("lm_decrease must lie in (0, 1)");
  }
  if (max_epochs < 1) throw DomainError("max_epochs must be >= 1");
  if (restarts < 1) throw DomainError("restarts must be >= 1");
  if (!(max_step_ratio >= 0.0)) throw DomainError("max_step_ratio must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw DomainError("validation_fraction must lie in [0, 0.5]");
  }
}

double Surrogate::predict(double t) const {
  return forward(spec, weights, scaling.to_input(t));
}

double Surrogate::rate(double t) const {
  return time_derivative(spec, weights, scaling.to_input(t)) / scaling.span;
}

namespace {

TrainReport train_once(const MlpSpec& spec, const Trajectory& data, const TrainConfig& config,
                       std::uint64_t seed) {
  const std::size_t n = data.size();
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction *
                                                   static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  const std::size_t n_train = n - n_val;

  TimeScaling scaling;
  scaling.origin = data.samples.front().t;
  const double span = data.samples.back().t - scaling.origin;
  scaling.span = span > 0.0 ? span : 1.0;

  std::vector<double> train_in, val_in;
  Eigen::VectorXd train_y(static_cast<Eigen::Index>(n_train));
  Eigen::VectorXd val_y(static_cast<Eigen::Index>(n_val));
  for (std::size_t l = 0; l < n; ++l) {
    const double input = scaling.to_input(data.samples[l].t);
    if (l < n_train) {
      train_in.push_back(input);
      train_y[static_cast<Eigen::Index>(l)] = data.samples[l].share;
    } else {
      val_in.push_back(input);
      val_y[static_cast<Eigen::Index>(l - n_train)] = data.samples[l].share;
    }
  }

  lm::Problem problem;
  problem.residuals = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return forward_batch(spec, unflatten(spec, p), train_in) - train_y;
  };
  problem.jacobian = [&](const Eigen::VectorXd& p) {
    return jacobian(spec, unflatten(spec, p), train_in);
  };
  lm::Options options;
  options.mu_initial = config.lm_initial;
  options.mu_increase = config.lm_increase;
  options.mu_decrease = config.lm_decrease;
  options.mu_ceiling = config.mu_ceiling;
  options.max_step_ratio = config.max_step_ratio;

  lm::Solver solver(problem, flatten(initialize_weights(spec, seed)), options);

  TrainReport report;
  report.seed = seed;
  report.train_count = n_train;
  report.validation_count = n_val;
  const auto validation_mse = [&](const Eigen::VectorXd& p) {
    if (n_val == 0) return solver.loss() / static_cast<double>(n_train);
    return (forward_batch(spec, unflatten(spec, p), val_in) - val_y).squaredNorm() /
           static_cast<double>(n_val);
  };
  const auto record = [&]() {
    report.train_mse.push_back(solver.loss() / static_cast<double>(n_train));
    report.val_mse.push_back(validation_mse(solver.params()));
  };

  record();
  Eigen::VectorXd best = solver.params();
  report.best_epoch = 0;
  report.best_val_mse = report.val_mse.back();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const lm::StepOutcome outcome = solver.iterate();
    report.epochs_run = static_cast<std::size_t>(epoch);
    if (outcome == lm::StepOutcome::mu_ceiling) {
      report.mu_ceiling_reached = true;
      if (report.accepted_steps == 0 && solver.loss() > 0.0) {
        throw NumericError("surrogate training failed: mu exceeded ceiling before any "
                           "accepted step");
      }
      record();
      break;
    }
    ++report.accepted_steps;
    record();
    if (report.val_mse.back() < report.best_val_mse) {
      report.best_val_mse = report.val_mse.back();
      report.best_epoch = report.val_mse.size() - 1;
      best = solver.params();
    }
    if (solver.loss() == 0.0) break;
  }

  report.surrogate = {spec, unflatten(spec, best), scaling};
  return report;
}

}  // namespace

TrainReport lm_train(const MlpSpec& spec, const Trajectory& data,
                     const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (data.empty()) throw DomainError("training data is empty");
  data.validate();

  std::vector<std::future<TrainReport>> runs;
  for (int k = 0; k < config.restarts; ++k) {
    runs.push_back(std::async(std::launch::async, train_once, std::cref(spec), std::cref(data),
                              std::cref(config), config.seed + static_cast<std::uint64_t>(k)));
  }
  std::optional<TrainReport> best;
  std::string failures;
  for (auto& run : runs) {
    try {
      TrainReport report = run.get();
      if (!best || report.best_val_mse < best->best_val_mse) best = std::move(report);
    } catch (const NumericError& e) {
      failures += std::string(failures.empty() ? "" : "; ") + e.what();
    }
  }
  if (!best) throw NumericError(failures);
  return *best;
}

nlohmann::json to_json(const Surrogate& surrogate) {
  check_shapes(surrogate.spec, surrogate.weights);
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& layer : surrogate.weights.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    std::vector<double> b(layer.biases.data(), layer.biases.data() + layer.biases.size());
    layers.push_back({{"rows", layer.weights.rows()},
                      {"cols", layer.weights.cols()},
                      {"weights", w},
                      {"biases", b}});
  }
  return {
      {"spec",
       {{"input_width", surrogate.spec.input_width},
        {"hidden_widths", surrogate.spec.hidden_widths},
        {"output_width", surrogate.spec.output_width}}},
      {"layers", layers},
      {"standardization",
       {{"time_origin", surrogate.scaling.origin}, {"time_span", surrogate.scaling.span}}},
  };
}

Surrogate surrogate_from_json(const nlohmann::json& doc) {
  try {
    Surrogate s;
    const auto& spec = doc.at("spec");
    s.spec.input_width = spec.at("input_width").get<std::size_t>();
    s.spec.hidden_widths = spec.at("hidden_widths").get<std::vector<std::size_t>>();
    s.spec.output_width = spec.at("output_width").get<std::size_t>();
    s.weights = zero_weights(s.spec);
    const auto& layers = doc.at("layers");
    if (layers.size() != s.weights.layers.size()) {
      throw DomainError("shape mismatch: layer count differs from spec");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      DenseLayer& layer = s.weights.layers[i];
      const auto w = layers[i].at("weights").get<std::vector<double>>();
      const auto b = layers[i].at("biases").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(layer.weights.size()) ||
          b.size() != static_cast<std::size_t>(layer.biases.size())) {
        throw DomainError("shape mismatch in layer " + std::to_string(i + 1));
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = w[k++];
      }
      for (std::size_t r = 0; r < b.size(); ++r) layer.biases[static_cast<Eigen::Index>(r)] = b[r];
    }
    const auto& scaling = doc.at("standardization");
    s.scaling.origin = scaling.at("time_origin").get<double>();
    s.scaling.span = scaling.at("time_span").get<double>();
    check_shapes(s.spec, s.weights);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed surrogate document: ") + e.what());
  }
}

void save_surrogate(const Surrogate& surrogate, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << to_json(surrogate).dump(2) << '\n';
}

Surrogate load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return surrogate_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace gvw
