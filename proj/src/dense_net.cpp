#include "simp/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simp/error.hpp"

namespace simp::nn {
namespace {

void apply_activation(Activation activation, Matrix& m) {
  if (activation == Activation::tanh) {
    for (double& v : m.values) v = std::tanh(v);
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::tanh ? "tanh" : "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw DataError("unknown activation '" + std::string(name) + "'");
}

double Gradients::squared_norm() const {
  double sum = 0.0;
  for (const auto& w : weights)
    for (double v : w.values) sum += v * v;
  for (const auto& b : biases)
    for (double v : b) sum += v * v;
  return sum;
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    if (!nn::all_finite(w.values)) return false;
  for (const auto& b : biases)
    if (!nn::all_finite(b)) return false;
  return true;
}

void Gradients::scale(double factor) {
  for (auto& w : weights)
    for (double& v : w.values) v *= factor;
  for (auto& b : biases)
    for (double& v : b) v *= factor;
}

DenseNet::DenseNet(std::vector<DenseLayer> layers, double dropout_rate, std::uint64_t seed)
    : layers_(std::move(layers)), dropout_rate_(dropout_rate), seed_(seed) {
  validate();
}

void DenseNet::validate() const {
  if (layers_.empty()) throw StructuralError("network needs at least one layer");
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) {
    throw StructuralError("dropout rate must lie in [0, 1)");
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.weights.values.size() != layer.inputs() * layer.outputs() ||
        layer.bias.size() != layer.outputs()) {
      throw StructuralError("layer " + std::to_string(k) + " has inconsistent parameter sizes");
    }
    if (k > 0 && layers_[k - 1].outputs() != layer.inputs()) {
      throw StructuralError("layer " + std::to_string(k) + " expects " +
                            std::to_string(layer.inputs()) + " inputs but layer " +
                            std::to_string(k - 1) + " produces " +
                            std::to_string(layers_[k - 1].outputs()));
    }
  }
}

DenseNet DenseNet::glorot(std::span<const std::size_t> dims, Activation hidden,
                          Activation output, double dropout_rate, std::uint64_t seed) {
  if (dims.size() < 2) throw StructuralError("glorot: need at least input and output widths");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer layer;
    layer.weights = Matrix(dims[k], dims[k + 1]);
    layer.bias.assign(dims[k + 1], 0.0);
    layer.activation = (k + 2 == dims.size()) ? output : hidden;
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[k] + dims[k + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights.values) w = dist(rng);
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers), dropout_rate, seed);
}

std::size_t DenseNet::input_dim() const { return layers_.empty() ? 0 : layers_.front().inputs(); }
std::size_t DenseNet::output_dim() const { return layers_.empty() ? 0 : layers_.back().outputs(); }

ForwardResult DenseNet::forward(std::span<const double> input, Mode mode, Rng* rng) const {
  Matrix batch(1, input.size());
  std::copy(input.begin(), input.end(), batch.values.begin());
  auto result = forward(batch, mode, rng, kernels::Backend::reference);
  return {std::move(result.output.values), std::move(result.tape)};
}

BatchForwardResult DenseNet::forward(const Matrix& inputs, Mode mode, Rng* rng,
                                     kernels::Backend backend) const {
  if (inputs.cols != input_dim()) {
    throw StructuralError("forward: input width " + std::to_string(inputs.cols) +
                          " but network expects " + std::to_string(input_dim()));
  }
  if (!all_finite(inputs.values)) throw InputError("forward: non-finite input");

  const bool dropout = mode == Mode::train && dropout_rate_ > 0.0 && layers_.size() > 1;
  if (dropout && rng == nullptr) throw StructuralError("forward: train-mode dropout needs an rng");

  GradientTape tape;
  tape.layer_inputs.reserve(layers_.size());
  tape.layer_outputs.reserve(layers_.size());

  Matrix current = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (dropout && k + 1 == layers_.size()) {
      // Inverted dropout: survivors are scaled by 1/keep at train time.
      const double keep = 1.0 - dropout_rate_;
      std::bernoulli_distribution survive(keep);
      tape.dropout_mask = Matrix(current.rows, current.cols);
      for (std::size_t i = 0; i < current.values.size(); ++i) {
        const double m = survive(*rng) ? 1.0 / keep : 0.0;
        tape.dropout_mask.values[i] = m;
        current.values[i] *= m;
      }
    }
    Matrix out;
    kernels::affine(backend, current, layer.weights, layer.bias, out);
    apply_activation(layer.activation, out);
    tape.layer_inputs.push_back(std::move(current));
    tape.layer_outputs.push_back(out);
    current = std::move(out);
  }
  return {std::move(current), std::move(tape)};
}

Gradients DenseNet::zero_gradients() const {
  Gradients g;
  for (const auto& layer : layers_) {
    g.weights.emplace_back(layer.inputs(), layer.outputs());
    g.biases.emplace_back(layer.outputs(), 0.0);
  }
  return g;
}

Gradients DenseNet::backward(const GradientTape& tape, const Matrix& output_grad,
                             kernels::Backend backend) const {
  if (tape.layer_inputs.size() != layers_.size() || tape.layer_outputs.size() != layers_.size()) {
    throw StructuralError("backward: tape was recorded on a network with a different depth");
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (tape.layer_inputs[k].cols != layers_[k].inputs() ||
        tape.layer_outputs[k].cols != layers_[k].outputs() ||
        tape.layer_inputs[k].rows != output_grad.rows) {
      throw StructuralError("backward: tape does not match layer " + std::to_string(k));
    }
  }
  if (output_grad.cols != output_dim()) {
    throw StructuralError("backward: output gradient width " + std::to_string(output_grad.cols) +
                          " but network output is " + std::to_string(output_dim()));
  }

  Gradients grads = zero_gradients();
  Matrix delta = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& layer = layers_[k];
    if (layer.activation == Activation::tanh) {
      const auto& a = tape.layer_outputs[k].values;
      for (std::size_t i = 0; i < delta.values.size(); ++i) delta.values[i] *= 1.0 - a[i] * a[i];
    }
    kernels::weight_grad(backend, tape.layer_inputs[k], delta, grads.weights[k], grads.biases[k]);
    if (k == 0) break;
    Matrix upstream;
    kernels::input_grad(backend, delta, layer.weights, upstream);
    if (k + 1 == layers_.size() && !tape.dropout_mask.values.empty()) {
      for (std::size_t i = 0; i < upstream.values.size(); ++i) {
        upstream.values[i] *= tape.dropout_mask.values[i];
      }
    }
    delta = std::move(upstream);
  }
  return grads;
}

Gradients DenseNet::backward(const GradientTape& tape, std::span<const double> output_grad) const {
  Matrix g(1, output_grad.size());
  std::copy(output_grad.begin(), output_grad.end(), g.values.begin());
  return backward(tape, g, kernels::Backend::reference);
}

nlohmann::json DenseNet::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    layers.push_back({{"inputs", layer.inputs()},
                      {"outputs", layer.outputs()},
                      {"activation", to_string(layer.activation)},
                      {"weights", layer.weights.values},
                      {"bias", layer.bias}});
  }
  return {{"format", "simp-dense-net"},
          {"format_version", kModelFormatVersion},
          {"weight_layout", "row-major inputs x outputs"},
          {"dropout_rate", dropout_rate_},
          {"seed", seed_},
          {"layers", std::move(layers)}};
}

DenseNet DenseNet::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported network format version");
    }
    std::vector<DenseLayer> layers;
    for (const auto& item : doc.at("layers")) {
      DenseLayer layer;
      const auto inputs = item.at("inputs").get<std::size_t>();
      const auto outputs = item.at("outputs").get<std::size_t>();
      layer.weights = Matrix(inputs, outputs);
      layer.weights.values = item.at("weights").get<std::vector<double>>();
      layer.bias = item.at("bias").get<std::vector<double>>();
      layer.activation = activation_from_string(item.at("activation").get<std::string>());
      layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers), doc.at("dropout_rate").get<double>(),
                    doc.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed network document: ") + e.what());
  }
}

}  // namespace simp::nn
