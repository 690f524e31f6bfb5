#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gvw {

/// Layer widths of a fully connected time -> share network with ReLU hidden
/// layers and a linear output unit.
struct MlpSpec {
  std::size_t input_width = 1;
  std::vector<std::size_t> hidden_widths{4, 8};
  std::size_t output_width = 1;

  /// Throws DomainError unless there are at least two hidden layers, every
  /// width is >= 1 and input/output widths are both 1.
  void validate() const;
  std::size_t parameter_count() const;
  /// Input, hidden and output widths in order.
  std::vector<std::size_t> layer_widths() const;

  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // (fan_out x fan_in)
  Eigen::VectorXd biases;   // (fan_out)
};

/// Per-layer weights and biases, first hidden layer first.
struct MlpWeights {
  std::vector<DenseLayer> layers;
};

/// Throws DomainError("shape mismatch ...") if `weights` do not fit `spec`
/// or hold non-finite entries.
void check_shapes(const MlpSpec& spec, const MlpWeights& weights);

MlpWeights zero_weights(const MlpSpec& spec);

/// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpWeights initialize_weights(const MlpSpec& spec, std::uint64_t seed);

/// Parameters in layer order; within a layer the weight matrix row-major,
/// then the biases.
Eigen::VectorXd flatten(const MlpWeights& weights);
MlpWeights unflatten(const MlpSpec& spec, const Eigen::VectorXd& params);

/// Network output at input t.
double forward(const MlpSpec& spec, const MlpWeights& weights, double t);

/// d forward / d t, pushing dh/dt = 1 through the layers with
/// ReLU'(z) = 1 for z > 0 and 0 for z <= 0.
double time_derivative(const MlpSpec& spec, const MlpWeights& weights, double t);

/// d forward(t_l) / d parameter, one row per input and columns in flatten()
/// order. Uses the same ReLU' convention as time_derivative.
Eigen::MatrixXd jacobian(const MlpSpec& spec, const MlpWeights& weights,
                         std::span<const double> times);

/// Outputs at every input; cheaper than calling forward() per point.
Eigen::VectorXd forward_batch(const MlpSpec& spec, const MlpWeights& weights,
                              std::span<const double> times);

/// Smallest |pre-activation| over all hidden units at input t. Points where
/// this is near zero sit on a kink of the piecewise-affine output.
double min_abs_preactivation(const MlpSpec& spec, const MlpWeights& weights, double t);

}  // namespace gvw
