#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "gvw/mlp.hpp"
#include "gvw/model.hpp"

namespace gvw {

struct TrainConfig {
  double lm_initial = 0.001;
  double lm_increase = 10.0;
  double lm_decrease = 0.1;
  double mu_ceiling = 1e10;
  /// Steps longer than this fraction of the weight norm are rejected; large
  /// Gauss-Newton steps otherwise switch off most ReLU units early on.
  double max_step_ratio = 0.03;
  int max_epochs = 1000;
  /// Chronological tail of the series held out for validation.
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
  /// Independent runs with seeds seed, seed + 1, ...; the run with the
  /// lowest best validation MSE is kept.
  int restarts = 1;

  void validate() const;
};

/// Affine map from model time to the network input: (t - origin) / span.
struct TimeScaling {
  double origin = 0.0;
  double span = 1.0;

  double to_input(double t) const { return (t - origin) / span; }

  bool operator==(const TimeScaling&) const = default;
};

/// A trained network together with its input standardization.
struct Surrogate {
  MlpSpec spec;
  MlpWeights weights;
  TimeScaling scaling;

  double predict(double t) const;
  /// d predict / d t in model time units (chain rule through the scaling).
  double rate(double t) const;
};

struct TrainReport {
  Surrogate surrogate;  // weights with the lowest validation MSE
  /// Entry e is the MSE after e epochs; entry 0 is the initial network.
  std::vector<double> train_mse;
  std::vector<double> val_mse;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  std::size_t epochs_run = 0;
  std::size_t accepted_steps = 0;
  /// True if training stopped because mu passed the ceiling.
  bool mu_ceiling_reached = false;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  /// Initialization seed of the kept run.
  std::uint64_t seed = 0;
};

/// Full-batch Levenberg-Marquardt fit of the network to the shares of
/// `data` as a function of time. Each epoch is one LM iteration: one
/// Jacobian, with mu raised until the training loss strictly drops (accepted)
/// or mu passes the ceiling (rejected; training stops). Without a validation
/// tail the training MSE stands in for the validation MSE.
///
/// Throws NumericError if mu passes the ceiling before any step was accepted
/// on a nonzero loss, in every restart.
TrainReport lm_train(const MlpSpec& spec, const Trajectory& data,
                     const TrainConfig& config);

nlohmann::json to_json(const Surrogate& surrogate);
Surrogate surrogate_from_json(const nlohmann::json& doc);

void save_surrogate(const Surrogate& surrogate, const std::string& path);
Surrogate load_surrogate(const std::string& path);

}  // namespace gvw
