#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "simp/kernels.hpp"
#include "simp/matrix.hpp"

namespace simp::nn {

enum class Activation { identity, tanh };
enum class Mode { train, infer };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

using Rng = std::mt19937_64;

struct DenseLayer {
  Matrix weights;  // inputs x outputs
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t inputs() const { return weights.rows; }
  std::size_t outputs() const { return weights.cols; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Activations cached by one forward pass. layer_inputs[k] is what layer k
/// consumed (post-dropout for the output layer); layer_outputs[k] is its
/// post-activation output.
struct GradientTape {
  std::vector<Matrix> layer_inputs;
  std::vector<Matrix> layer_outputs;
  Matrix dropout_mask;  // empty when dropout was inactive
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  double squared_norm() const;
  bool all_finite() const;
  void scale(double factor);
};

struct ForwardResult {
  std::vector<double> output;
  GradientTape tape;
};

struct BatchForwardResult {
  Matrix output;
  GradientTape tape;
};

/// Fully connected feed-forward network. Dropout, when its rate is positive,
/// acts on the input of the final layer (after the last hidden activation).
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<DenseLayer> layers, double dropout_rate, std::uint64_t seed);

  /// Uniform Glorot initialization with zero biases. dims lists every layer
  /// width including input and output.
  static DenseNet glorot(std::span<const std::size_t> dims, Activation hidden,
                         Activation output, double dropout_rate, std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  double dropout_rate() const { return dropout_rate_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Single-sample pass. Train mode requires an rng when dropout is active.
  ForwardResult forward(std::span<const double> input, Mode mode, Rng* rng = nullptr) const;

  /// Batched pass; each row of inputs is one sample.
  BatchForwardResult forward(const Matrix& inputs, Mode mode, Rng* rng = nullptr,
                             kernels::Backend backend = kernels::Backend::openmp) const;

  /// Parameter gradients summed over the batch held by the tape.
  Gradients backward(const GradientTape& tape, const Matrix& output_grad,
                     kernels::Backend backend = kernels::Backend::openmp) const;
  Gradients backward(const GradientTape& tape, std::span<const double> output_grad) const;

  Gradients zero_gradients() const;

  nlohmann::json to_json() const;
  static DenseNet from_json(const nlohmann::json& doc);

  friend bool operator==(const DenseNet&, const DenseNet&) = default;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  double dropout_rate_ = 0.0;
  std::uint64_t seed_ = 0;
};

inline constexpr int kModelFormatVersion = 1;

}  // namespace simp::nn
