#include "simp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "simp/features.hpp"
#include "simp/log.hpp"
#include "simp/trajectory.hpp"

namespace simp::train {
namespace {

std::uint64_t fnv1a(std::uint64_t h, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view backend_name(kernels::Backend b) {
  return b == kernels::Backend::openmp ? "openmp" : "reference";
}

kernels::Backend backend_from_name(const std::string& s) {
  if (s == "openmp") return kernels::Backend::openmp;
  if (s == "reference") return kernels::Backend::reference;
  throw InputError("unknown kernel backend '" + s + "'");
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Log-Jacobian of the target scaling; converts the scaled-space likelihood
/// back to feet and seconds.
double log_jacobian(const TargetScaling& t) { return std::log(t.s_scale) + std::log(t.t_scale); }

struct BatchStats {
  mdn::LossTerms terms;
  std::size_t correct = 0;
};

/// Inference-mode loss and argmax hits over samples, in chunks.
BatchStats score(const Model& model, std::span<const data::Sample> samples) {
  BatchStats stats;
  const std::size_t chunk = 1024;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const auto part = samples.subspan(begin, std::min(chunk, samples.size() - begin));
    const Matrix x = model.design_matrix(part);
    const auto out = model.net.forward(x, nn::Mode::infer, nullptr, model.config.backend);
    std::vector<mdn::Truth> truths;
    truths.reserve(part.size());
    for (const auto& s : part) truths.push_back(model.scaled_truth(s.label));
    const auto loss = mdn::loss_gradient(out.output, truths, model.layout, model.config.loss);
    stats.terms += loss.terms;
    for (std::size_t r = 0; r < part.size(); ++r) {
      const auto params = mdn::constrain(out.output.row(r), model.layout);
      if (static_cast<int>(argmax(params.weights())) + 1 == part[r].label.area) ++stats.correct;
    }
  }
  return stats;
}

mdn::LossTerms per_sample(mdn::LossTerms sum, std::size_t n, const Model& model) {
  if (n == 0) return {};
  const double inv = 1.0 / static_cast<double>(n);
  mdn::LossTerms out;
  out.likelihood = sum.likelihood * inv + log_jacobian(model.targets);
  out.cross_entropy = sum.cross_entropy * inv;
  out.total = model.config.loss.likelihood * out.likelihood +
              model.config.loss.cross_entropy * out.cross_entropy;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (areas < 1) throw InputError("areas must be >= 1");
  if (components < 1) throw InputError("components must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  if (!(loss.likelihood >= 0.0 && loss.cross_entropy >= 0.0) ||
      loss.likelihood + loss.cross_entropy <= 0.0) {
    throw InputError("loss weights must be non-negative and not both zero");
  }
  if (!(optimizer.learning_rate >= 0.0)) throw InputError("learning rate must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InputError("validation fraction must lie in [0, 1)");
  }
  for (auto h : hidden) {
    if (h == 0) throw InputError("hidden layer widths must be positive");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"hidden", c.hidden},
       {"dropout", c.dropout},
       {"components", c.components},
       {"areas", c.areas},
       {"w1", c.loss.likelihood},
       {"w2", c.loss.cross_entropy},
       {"optimizer", c.optimizer},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"seed", c.seed},
       {"patience", c.patience},
       {"validation_fraction", c.validation_fraction},
       {"standardize_targets", c.standardize_targets},
       {"backend", backend_name(c.backend)}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.hidden = j.value("hidden", d.hidden);
  c.dropout = j.value("dropout", d.dropout);
  c.components = j.value("components", d.components);
  c.areas = j.value("areas", d.areas);
  c.loss.likelihood = j.value("w1", d.loss.likelihood);
  c.loss.cross_entropy = j.value("w2", d.loss.cross_entropy);
  c.optimizer = j.value("optimizer", d.optimizer);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.seed = j.value("seed", d.seed);
  c.patience = j.value("patience", d.patience);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.standardize_targets = j.value("standardize_targets", d.standardize_targets);
  c.backend = backend_from_name(j.value("backend", std::string(backend_name(d.backend))));
}

std::uint64_t normalization_hash(const data::Normalization& n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : n.mean) h = fnv1a(h, v);
  for (double v : n.stddev) h = fnv1a(h, v);
  return h;
}

data::Normalization fit_normalization(std::span<const data::Sample> samples) {
  data::Normalization n;
  n.mean.assign(scene::kFeatureCount, 0.0);
  n.stddev.assign(scene::kFeatureCount, 1.0);
  if (samples.empty()) return n;
  const double count = static_cast<double>(samples.size());
  for (std::size_t f = 0; f < scene::kFeatureCount; ++f) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.features[f];
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& s : samples) ss += (s.features[f] - mean) * (s.features[f] - mean);
    const double sd = std::sqrt(ss / count);
    n.mean[f] = mean;
    n.stddev[f] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

TargetScaling fit_target_scaling(std::span<const data::Sample> samples) {
  TargetScaling t;
  if (samples.empty()) return t;
  const double count = static_cast<double>(samples.size());
  double s = 0.0, tt = 0.0;
  for (const auto& x : samples) {
    s += x.label.y_s;
    tt += x.label.y_t;
  }
  t.s_mean = s / count;
  t.t_mean = tt / count;
  double ss = 0.0, st = 0.0;
  for (const auto& x : samples) {
    ss += (x.label.y_s - t.s_mean) * (x.label.y_s - t.s_mean);
    st += (x.label.y_t - t.t_mean) * (x.label.y_t - t.t_mean);
  }
  const double sd_s = std::sqrt(ss / count);
  const double sd_t = std::sqrt(st / count);
  t.s_scale = sd_s > 1e-9 ? sd_s : 1.0;
  t.t_scale = sd_t > 1e-9 ? sd_t : 1.0;
  return t;
}

Matrix Model::design_matrix(std::span<const data::Sample> samples) const {
  Matrix x(samples.size(), scene::kFeatureCount);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    for (std::size_t f = 0; f < scene::kFeatureCount; ++f) {
      x(r, f) = (samples[r].features[f] - normalization.mean[f]) / normalization.stddev[f];
    }
  }
  return x;
}

mdn::Truth Model::scaled_truth(const scene::Label& label) const {
  if (label.area < 1 || static_cast<std::size_t>(label.area) > layout.areas) {
    throw InputError("label area " + std::to_string(label.area) + " outside the model's areas");
  }
  return mdn::Truth::one_hot(layout.areas, static_cast<std::size_t>(label.area - 1),
                             {(label.y_s - targets.s_mean) / targets.s_scale,
                              (label.y_t - targets.t_mean) / targets.t_scale});
}

namespace {

void unscale(mdn::MixtureParams& p, const TargetScaling& t) {
  for (auto& area : p.areas) {
    for (auto& c : area.components) {
      c.mu_s = t.s_mean + t.s_scale * c.mu_s;
      c.mu_t = t.t_mean + t.t_scale * c.mu_t;
      c.sigma_s *= t.s_scale;
      c.sigma_t *= t.t_scale;
    }
  }
}

}  // namespace

mdn::MixtureParams Model::predict(std::span<const double> features) const {
  if (features.size() != scene::kFeatureCount) {
    throw InputError("expected " + std::to_string(scene::kFeatureCount) + " features, got " +
                     std::to_string(features.size()));
  }
  std::vector<double> x(features.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    x[f] = (features[f] - normalization.mean[f]) / normalization.stddev[f];
  }
  auto params = mdn::constrain(net.forward(x, nn::Mode::infer).output, layout);
  unscale(params, targets);
  return params;
}

std::vector<mdn::MixtureParams> Model::predict_batch(std::span<const data::Sample> samples) const {
  std::vector<mdn::MixtureParams> out;
  out.reserve(samples.size());
  const std::size_t chunk = 1024;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const auto part = samples.subspan(begin, std::min(chunk, samples.size() - begin));
    const auto result = net.forward(design_matrix(part), nn::Mode::infer, nullptr, config.backend);
    for (std::size_t r = 0; r < part.size(); ++r) {
      out.push_back(mdn::constrain(result.output.row(r), layout));
      unscale(out.back(), targets);
    }
  }
  return out;
}

nlohmann::json Model::to_json() const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(normalization_hash));
  char order[17];
  std::snprintf(order, sizeof order, "%016llx",
                static_cast<unsigned long long>(scene::feature_ordering_hash()));
  nlohmann::json j;
  j["format"] = "simp-model";
  j["format_version"] = nn::kModelFormatVersion;
  j["network"] = net.to_json();
  j["layout"] = {{"areas", layout.areas}, {"components", layout.components}};
  j["feature_ordering_hash"] = order;
  j["normalization"] = {{"mean", normalization.mean},
                        {"stddev", normalization.stddev},
                        {"hash", hash}};
  j["target_scaling"] = {{"s_mean", targets.s_mean},
                         {"s_scale", targets.s_scale},
                         {"t_mean", targets.t_mean},
                         {"t_scale", targets.t_scale}};
  j["train_config"] = config;
  return j;
}

Model Model::from_json(const nlohmann::json& doc) {
  Model m;
  try {
    if (doc.at("format").get<std::string>() != "simp-model") throw DataError("not a simp model file");
    if (doc.at("format_version").get<int>() != nn::kModelFormatVersion) {
      throw DataError("unsupported model format version");
    }
    m.net = nn::DenseNet::from_json(doc.at("network"));
    m.layout.areas = doc.at("layout").at("areas").get<std::size_t>();
    m.layout.components = doc.at("layout").at("components").get<std::size_t>();
    const auto& n = doc.at("normalization");
    m.normalization.mean = n.at("mean").get<std::vector<double>>();
    m.normalization.stddev = n.at("stddev").get<std::vector<double>>();
    m.normalization_hash = std::stoull(n.at("hash").get<std::string>(), nullptr, 16);
    const auto& t = doc.at("target_scaling");
    m.targets = {t.at("s_mean").get<double>(), t.at("s_scale").get<double>(),
                 t.at("t_mean").get<double>(), t.at("t_scale").get<double>()};
    m.config = doc.at("train_config").get<TrainConfig>();
    char order[17];
    std::snprintf(order, sizeof order, "%016llx",
                  static_cast<unsigned long long>(scene::feature_ordering_hash()));
    if (doc.at("feature_ordering_hash").get<std::string>() != order) {
      throw DataError("model feature ordering does not match this build");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  if (m.normalization.mean.size() != scene::kFeatureCount ||
      m.normalization.stddev.size() != scene::kFeatureCount) {
    throw DataError("model normalization has the wrong length");
  }
  if (train::normalization_hash(m.normalization) != m.normalization_hash) {
    throw DataError("model normalization constants do not match their stored hash");
  }
  if (m.net.input_dim() != scene::kFeatureCount || m.net.output_dim() != m.layout.raw_size()) {
    throw DataError("model network shape does not match its layout");
  }
  m.config.areas = m.layout.areas;
  m.config.components = m.layout.components;
  return m;
}

Model initial_model(const data::Dataset& train, const TrainConfig& config) {
  config.validate();
  Model m;
  m.config = config;
  m.layout = config.layout();
  m.normalization = fit_normalization(train.samples);
  m.normalization_hash = train::normalization_hash(m.normalization);
  m.targets = config.standardize_targets ? fit_target_scaling(train.samples) : TargetScaling{};
  std::vector<std::size_t> dims;
  dims.push_back(scene::kFeatureCount);
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(m.layout.raw_size());
  m.net = nn::DenseNet::glorot(dims, nn::Activation::tanh, nn::Activation::identity,
                               config.dropout, config.seed);
  return m;
}

nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j = {{"epoch", e.epoch},
                      {"train_w1_term", e.train.likelihood},
                      {"train_w2_term", e.train.cross_entropy},
                      {"train_total", e.train.total}};
  if (e.validation) {
    j["validation_w1_term"] = e.validation->likelihood;
    j["validation_w2_term"] = e.validation->cross_entropy;
    j["validation_total"] = e.validation->total;
  }
  if (e.validation_accuracy) j["validation_area_accuracy"] = *e.validation_accuracy;
  return j;
}

mdn::LossTerms evaluate_loss(const Model& model, std::span<const data::Sample> samples) {
  return per_sample(score(model, samples).terms, samples.size(), model);
}

double area_accuracy(const Model& model, std::span<const data::Sample> samples) {
  if (samples.empty()) return 0.0;
  return static_cast<double>(score(model, samples).correct) / static_cast<double>(samples.size());
}

TrainResult train(const data::Dataset& train_set, const data::Dataset* validation,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  return train(initial_model(train_set, config), train_set, validation, on_epoch);
}

TrainResult train(Model model, const data::Dataset& train_set, const data::Dataset* validation,
                  const EpochCallback& on_epoch) {
  const TrainConfig& config = model.config;
  config.validate();
  if (validation && validation->header.feature_names != train_set.header.feature_names) {
    throw DataError("training and validation sets declare different feature orderings");
  }
  if (train::normalization_hash(model.normalization) != model.normalization_hash) {
    throw DataError("model normalization constants were modified after fitting");
  }

  TrainResult result;
  result.model = model;
  const auto& samples = train_set.samples;
  if (samples.empty()) throw InputError("training set is empty");
  if (config.epochs == 0) return result;

  // Precompute the standardized inputs and scaled truths once.
  const Matrix all_x = model.design_matrix(samples);
  std::vector<mdn::Truth> all_truth;
  all_truth.reserve(samples.size());
  for (const auto& s : samples) all_truth.push_back(model.scaled_truth(s.label));

  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eedf00dULL);
  nn::Rng dropout_rng(config.seed + 1);
  nn::Optimizer optimizer(config.optimizer);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool has_validation = validation && !validation->samples.empty();
  double best = std::numeric_limits<double>::infinity();
  if (has_validation) best = evaluate_loss(model, validation->samples).total;
  std::size_t since_best = 0;

  Matrix x;
  std::vector<mdn::Truth> truths;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    mdn::LossTerms epoch_sum;
    std::size_t batch_id = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_id) {
      const std::size_t n = std::min(config.batch_size, order.size() - begin);
      x.rows = n;
      x.cols = all_x.cols;
      x.values.resize(n * all_x.cols);
      truths.clear();
      for (std::size_t r = 0; r < n; ++r) {
        const auto src = all_x.row(order[begin + r]);
        std::copy(src.begin(), src.end(), x.values.begin() + static_cast<std::ptrdiff_t>(r * x.cols));
        truths.push_back(all_truth[order[begin + r]]);
      }
      const auto where = " in epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_id);
      const auto fwd = model.net.forward(x, nn::Mode::train, &dropout_rng, config.backend);
      mdn::BatchLoss loss;
      try {
        loss = mdn::loss_gradient(fwd.output, truths, model.layout, config.loss);
      } catch (const NumericError& e) {
        throw TrainingAborted(std::string(e.what()) + where, model, epoch, batch_id);
      }
      if (!std::isfinite(loss.terms.total)) {
        throw TrainingAborted("non-finite loss" + where, model, epoch, batch_id);
      }
      // Mean over the batch keeps the step size independent of batch size.
      for (double& g : loss.gradient.values) g /= static_cast<double>(n);
      auto grads = model.net.backward(fwd.tape, loss.gradient, config.backend);
      try {
        optimizer.step(model.net, std::move(grads));
      } catch (const NumericError& e) {
        throw TrainingAborted(std::string(e.what()) + where, model, epoch, batch_id);
      }
      epoch_sum += loss.terms;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train = per_sample(epoch_sum, samples.size(), model);
    double monitored = entry.train.total;
    if (has_validation) {
      const auto stats = score(model, validation->samples);
      entry.validation = per_sample(stats.terms, validation->samples.size(), model);
      entry.validation_accuracy =
          static_cast<double>(stats.correct) / static_cast<double>(validation->samples.size());
      monitored = entry.validation->total;
    }
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (entry.validation) {
      spdlog::info("epoch {:4d}  W1-term {:9.4f}  W2-term {:7.4f}  total {:9.4f}  | val total {:9.4f}  val acc {:.4f}  ({:.1f}s)",
                   epoch, entry.train.likelihood, entry.train.cross_entropy, entry.train.total,
                   entry.validation->total, *entry.validation_accuracy, entry.seconds);
    } else {
      spdlog::info("epoch {:4d}  W1-term {:9.4f}  W2-term {:7.4f}  total {:9.4f}  ({:.1f}s)", epoch,
                   entry.train.likelihood, entry.train.cross_entropy, entry.train.total,
                   entry.seconds);
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (!std::isfinite(monitored)) {
      throw TrainingAborted("non-finite monitored loss after epoch " + std::to_string(epoch),
                            result.model, epoch, batch_id);
    }
    if (monitored < best) {
      best = monitored;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      spdlog::info("early stop after epoch {} (best epoch {})", epoch, result.best_epoch);
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  data::write_text_file(path, model.to_json().dump(1) + "\n");
}

Model load_model(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(data::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return Model::from_json(doc);
}

}  // namespace simp::train
