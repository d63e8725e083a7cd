#include "simp/optimizer.hpp"

#include <cmath>
#include <string>

#include "simp/error.hpp"

namespace simp::nn {
namespace {

void check_shapes(const DenseNet& net, const Gradients& grads) {
  const auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || grads.biases.size() != layers.size()) {
    throw StructuralError("optimizer: gradient depth does not match network");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!grads.weights[k].same_shape(layers[k].weights) ||
        grads.biases[k].size() != layers[k].bias.size()) {
      throw StructuralError("optimizer: gradient shape mismatch at layer " + std::to_string(k));
    }
  }
}

void check_finite(const Gradients& grads) {
  if (!grads.all_finite()) {
    throw NumericError("non-finite gradient encountered (norm^2 = " +
                       std::to_string(grads.squared_norm()) + ")");
  }
}

template <typename Fn>
void for_each_parameter(DenseNet& net, const Gradients& grads, Fn&& fn) {
  auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& w = layers[k].weights.values;
    for (std::size_t i = 0; i < w.size(); ++i) fn(w[i], grads.weights[k].values[i], k, i, false);
    auto& b = layers[k].bias;
    for (std::size_t i = 0; i < b.size(); ++i) fn(b[i], grads.biases[k][i], k, i, true);
  }
}

}  // namespace

NLOHMANN_JSON_SERIALIZE_ENUM(OptimizerKind, {{OptimizerKind::sgd, "sgd"},
                                             {OptimizerKind::adam, "adam"}})

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = {{"kind", c.kind},       {"learning_rate", c.learning_rate},
       {"beta1", c.beta1},     {"beta2", c.beta2},
       {"epsilon", c.epsilon}, {"clip_norm", c.clip_norm}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  const OptimizerConfig d;
  c.kind = j.value("kind", d.kind);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.epsilon = j.value("epsilon", d.epsilon);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

void sgd_step(DenseNet& net, Gradients grads, double learning_rate,
              const OptimizerConfig& config) {
  check_shapes(net, grads);
  check_finite(grads);
  clip_global_norm(grads, config.clip_norm);
  for_each_parameter(net, grads, [&](double& p, double g, std::size_t, std::size_t, bool) {
    p -= learning_rate * g;
  });
}

void Optimizer::step(DenseNet& net, Gradients grads) {
  check_shapes(net, grads);
  check_finite(grads);
  if (config_.kind == OptimizerKind::sgd) {
    sgd_step(net, std::move(grads), config_.learning_rate, config_);
    ++steps_;
    return;
  }

  clip_global_norm(grads, config_.clip_norm);
  if (first_moment_.weights.empty()) {
    first_moment_ = net.zero_gradients();
    second_moment_ = net.zero_gradients();
  }
  check_shapes(net, first_moment_);
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for_each_parameter(net, grads, [&](double& p, double g, std::size_t k, std::size_t i, bool bias) {
    double& m = bias ? first_moment_.biases[k][i] : first_moment_.weights[k].values[i];
    double& v = bias ? second_moment_.biases[k][i] : second_moment_.weights[k].values[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    p -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  });
}

}  // namespace simp::nn
