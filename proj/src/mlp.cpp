#include "gvw/mlp.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gvw/error.hpp"

namespace gvw {

void MlpSpec::validate() const {
  if (input_width != 1) throw DomainError("surrogate input width must be 1 (time)");
  if (output_width != 1) throw DomainError("surrogate output width must be 1 (share)");
  if (hidden_widths.size() < 2) {
    throw DomainError("surrogate needs at least two hidden layers");
  }
  for (std::size_t w : hidden_widths) {
    if (w < 1) throw DomainError("hidden layer widths must be >= 1");
  }
}

std::vector<std::size_t> MlpSpec::layer_widths() const {
  std::vector<std::size_t> widths;
  widths.reserve(hidden_widths.size() + 2);
  widths.push_back(input_width);
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(output_width);
  return widths;
}

std::size_t MlpSpec::parameter_count() const {
  const auto widths = layer_widths();
  std::size_t count = 0;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    count += widths[i] * widths[i - 1] + widths[i];
  }
  return count;
}

void check_shapes(const MlpSpec& spec, const MlpWeights& weights) {
  spec.validate();
  const auto widths = spec.layer_widths();
  if (weights.layers.size() != widths.size() - 1) {
    throw DomainError("shape mismatch: expected " + std::to_string(widths.size() - 1) +
                      " layers, got " + std::to_string(weights.layers.size()));
  }
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const DenseLayer& layer = weights.layers[i];
    const auto rows = static_cast<Eigen::Index>(widths[i + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[i]);
    if (layer.weights.rows() != rows || layer.weights.cols() != cols ||
        layer.biases.size() != rows) {
      throw DomainError("shape mismatch in layer " + std::to_string(i + 1));
    }
    if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
      throw DomainError("non-finite weight in layer " + std::to_string(i + 1));
    }
  }
}

MlpWeights zero_weights(const MlpSpec& spec) {
  spec.validate();
  const auto widths = spec.layer_widths();
  MlpWeights w;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    const auto rows = static_cast<Eigen::Index>(widths[i]);
    const auto cols = static_cast<Eigen::Index>(widths[i - 1]);
    w.layers.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
  }
  return w;
}

MlpWeights initialize_weights(const MlpSpec& spec, std::uint64_t seed) {
  MlpWeights w = zero_weights(spec);
  std::mt19937_64 rng(seed);
  for (DenseLayer& layer : w.layers) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill keeps the draw order identical to flatten().
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = dist(rng);
      }
    }
  }
  // With zero biases every first-layer kink would sit at input 0 and the
  // initial network would be linear on [0, 1]. Place the kinks at evenly
  // spread points of the standardized input range instead.
  DenseLayer& first = w.layers.front();
  const auto units = first.weights.rows();
  for (Eigen::Index r = 0; r < units; ++r) {
    const double kink = (static_cast<double>(r) + 0.5) / static_cast<double>(units);
    first.biases[r] = -first.weights(r, 0) * kink;
  }
  return w;
}

Eigen::VectorXd flatten(const MlpWeights& weights) {
  Eigen::Index total = 0;
  for (const auto& layer : weights.layers) total += layer.weights.size() + layer.biases.size();
  Eigen::VectorXd out(total);
  Eigen::Index k = 0;
  for (const auto& layer : weights.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out[k++] = layer.weights(r, c);
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) out[k++] = layer.biases[r];
  }
  return out;
}

MlpWeights unflatten(const MlpSpec& spec, const Eigen::VectorXd& params) {
  MlpWeights w = zero_weights(spec);
  if (params.size() != static_cast<Eigen::Index>(spec.parameter_count())) {
    throw DomainError("shape mismatch: parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (auto& layer : w.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = params[k++];
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) layer.biases[r] = params[k++];
  }
  return w;
}

namespace {

// Hidden-layer pre-activations for one input, first layer first.
std::vector<Eigen::VectorXd> hidden_preactivations(const MlpWeights& weights, double t) {
  std::vector<Eigen::VectorXd> z;
  z.reserve(weights.layers.size() - 1);
  Eigen::VectorXd h = Eigen::VectorXd::Constant(1, t);
  for (std::size_t i = 0; i + 1 < weights.layers.size(); ++i) {
    const DenseLayer& layer = weights.layers[i];
    z.push_back(layer.weights * h + layer.biases);
    h = z.back().cwiseMax(0.0);
  }
  return z;
}

double output_from_hidden(const MlpWeights& weights, const Eigen::VectorXd& pre) {
  const DenseLayer& out = weights.layers.back();
  return (out.weights * pre.cwiseMax(0.0))(0) + out.biases(0);
}

Eigen::VectorXd relu_slope(const Eigen::VectorXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

double forward(const MlpSpec& spec, const MlpWeights& weights, double t) {
  check_shapes(spec, weights);
  const auto z = hidden_preactivations(weights, t);
  return output_from_hidden(weights, z.back());
}

Eigen::VectorXd forward_batch(const MlpSpec& spec, const MlpWeights& weights,
                              std::span<const double> times) {
  check_shapes(spec, weights);
  Eigen::MatrixXd h(1, static_cast<Eigen::Index>(times.size()));
  for (std::size_t l = 0; l < times.size(); ++l) h(0, static_cast<Eigen::Index>(l)) = times[l];
  for (std::size_t i = 0; i + 1 < weights.layers.size(); ++i) {
    const DenseLayer& layer = weights.layers[i];
    h = ((layer.weights * h).colwise() + layer.biases).cwiseMax(0.0);
  }
  const DenseLayer& out = weights.layers.back();
  Eigen::RowVectorXd y = (out.weights * h).row(0).array() + out.biases(0);
  return y.transpose();
}

double time_derivative(const MlpSpec& spec, const MlpWeights& weights, double t) {
  check_shapes(spec, weights);
  const auto z = hidden_preactivations(weights, t);
  Eigen::VectorXd dh = Eigen::VectorXd::Ones(1);
  for (std::size_t i = 0; i + 1 < weights.layers.size(); ++i) {
    dh = relu_slope(z[i]).cwiseProduct(weights.layers[i].weights * dh);
  }
  return (weights.layers.back().weights * dh)(0);
}

Eigen::MatrixXd jacobian(const MlpSpec& spec, const MlpWeights& weights,
                         std::span<const double> times) {
  check_shapes(spec, weights);
  const std::size_t n_layers = weights.layers.size();
  // Column offset of each layer's block in flatten() order.
  std::vector<Eigen::Index> offset(n_layers);
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < n_layers; ++i) {
    offset[i] = total;
    total += weights.layers[i].weights.size() + weights.layers[i].biases.size();
  }

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(times.size()), total);
  std::vector<Eigen::VectorXd> inputs(n_layers);
  for (std::size_t l = 0; l < times.size(); ++l) {
    const auto row = static_cast<Eigen::Index>(l);
    const auto z = hidden_preactivations(weights, times[l]);
    inputs[0] = Eigen::VectorXd::Constant(1, times[l]);
    for (std::size_t i = 1; i < n_layers; ++i) inputs[i] = z[i - 1].cwiseMax(0.0);

    // Backward pass: grad holds d output / d pre-activation of layer i.
    Eigen::VectorXd grad = Eigen::VectorXd::Ones(1);
    for (std::size_t i = n_layers; i-- > 0;) {
      const DenseLayer& layer = weights.layers[i];
      Eigen::Index k = offset[i];
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          jac(row, k++) = grad[r] * inputs[i][c];
        }
      }
      for (Eigen::Index r = 0; r < layer.biases.size(); ++r) jac(row, k++) = grad[r];
      if (i > 0) grad = relu_slope(z[i - 1]).cwiseProduct(layer.weights.transpose() * grad);
    }
  }
  return jac;
}

double min_abs_preactivation(const MlpSpec& spec, const MlpWeights& weights, double t) {
  check_shapes(spec, weights);
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& z : hidden_preactivations(weights, t)) {
    smallest = std::min(smallest, z.cwiseAbs().minCoeff());
  }
  return smallest;
}

}  // namespace gvw
