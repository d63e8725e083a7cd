#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "simp/dataset.hpp"
#include "simp/dense_net.hpp"
#include "simp/error.hpp"
#include "simp/mixture.hpp"
#include "simp/optimizer.hpp"

namespace simp::train {

struct TrainConfig {
  std::vector<std::size_t> hidden{400, 400, 400};
  double dropout = 0.5;  // on the last hidden layer's output
  std::size_t components = 1;
  std::size_t areas = 5;
  mdn::LossWeights loss{};
  nn::OptimizerConfig optimizer{};
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  std::size_t patience = 20;            // epochs without validation improvement; 0 disables
  double validation_fraction = 0.1;     // episodes held out from the training set by the CLI
  bool standardize_targets = true;
  kernels::Backend backend = kernels::Backend::openmp;

  mdn::MixtureLayout layout() const { return {areas, components}; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Affine map of the motion targets into the space the network predicts.
struct TargetScaling {
  double s_mean = 0.0;
  double s_scale = 1.0;
  double t_mean = 0.0;
  double t_scale = 1.0;

  friend bool operator==(const TargetScaling&, const TargetScaling&) = default;
};

/// Hash of normalization constants; stored with the model and rechecked on
/// load so evaluation never silently uses recomputed constants.
std::uint64_t normalization_hash(const data::Normalization& n);

/// Per-feature mean and population standard deviation (1 where degenerate).
data::Normalization fit_normalization(std::span<const data::Sample> samples);
TargetScaling fit_target_scaling(std::span<const data::Sample> samples);

struct Model {
  nn::DenseNet net;
  mdn::MixtureLayout layout;
  data::Normalization normalization;
  std::uint64_t normalization_hash = 0;
  TargetScaling targets;
  TrainConfig config;

  /// Standardizes features with the stored constants and returns mixture
  /// parameters in feet and seconds. Inference mode, no dropout.
  mdn::MixtureParams predict(std::span<const double> features) const;
  std::vector<mdn::MixtureParams> predict_batch(std::span<const data::Sample> samples) const;

  /// Rows of standardized features, one per sample.
  Matrix design_matrix(std::span<const data::Sample> samples) const;
  /// Truth for a sample in the scaled target space.
  mdn::Truth scaled_truth(const scene::Label& label) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& doc);

  friend bool operator==(const Model& a, const Model& b) {
    return a.net == b.net && a.normalization == b.normalization && a.targets == b.targets &&
           a.layout.areas == b.layout.areas && a.layout.components == b.layout.components;
  }
};

/// Fresh Glorot-initialized model with constants fitted on train.
Model initial_model(const data::Dataset& train, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  // Per-sample means in feet and seconds; the W1/W2 columns are unweighted.
  mdn::LossTerms train;
  std::optional<mdn::LossTerms> validation;
  std::optional<double> validation_accuracy;  // area argmax
  double seconds = 0.0;  // wall time, logged but never serialized
};

nlohmann::json to_json(const EpochLog& e);

struct TrainResult {
  Model model;  // best checkpoint
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 means the initialization was never beaten
  bool stopped_early = false;
};

/// Thrown when a batch produces a non-finite loss or gradient.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, Model last_good, std::size_t epoch, std::size_t batch)
      : NumericError(what), last_good_(std::move(last_good)), epoch_(epoch), batch_(batch) {}
  const Model& last_good() const { return last_good_; }
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  Model last_good_;
  std::size_t epoch_;
  std::size_t batch_;
};

/// Mean per-sample loss of a model over a dataset, inference mode.
mdn::LossTerms evaluate_loss(const Model& model, std::span<const data::Sample> samples);
double area_accuracy(const Model& model, std::span<const data::Sample> samples);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains from a fresh initialization. With a validation set, returns the
/// checkpoint with the lowest validation total loss; otherwise the lowest
/// training loss.
TrainResult train(const data::Dataset& train_set, const data::Dataset* validation,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Continues training an existing model (constants stay fixed).
TrainResult train(Model model, const data::Dataset& train_set, const data::Dataset* validation,
                  const EpochCallback& on_epoch = {});

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace simp::train
