#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "simp/dense_net.hpp"

namespace simp::nn {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 10.0;  // global L2 norm; <= 0 disables clipping
};

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

/// Stateful parameter updater. Adam moment buffers are created lazily on the
/// first step and tied to the network's shape from then on.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  /// Clips, validates, then applies one update. Throws NumericError when any
  /// gradient is non-finite; the network is left untouched in that case.
  void step(DenseNet& net, Gradients grads);

  const OptimizerConfig& config() const { return config_; }
  std::size_t steps_taken() const { return steps_; }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  Gradients first_moment_;
  Gradients second_moment_;
};

/// One stateless plain-SGD update with the given learning rate.
void sgd_step(DenseNet& net, Gradients grads, double learning_rate,
              const OptimizerConfig& config = {.kind = OptimizerKind::sgd});

/// Rescales grads in place so their global norm does not exceed max_norm.
/// Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace simp::nn
