#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "simp/error.hpp"
#include "simp/trainer.hpp"
#include "simp/trajectory.hpp"

using namespace simp;
using train::TrainConfig;
using train::Model;
using train::TrainingAborted;
using train::initial_model;
using train::evaluate_loss;
using train::area_accuracy;
using train::fit_normalization;
using train::normalization_hash;
using train::save_model;
using train::load_model;

namespace {

// Labels depend smoothly on the first features so the toy problem is learnable.
data::Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  data::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    data::Sample s;
    for (std::size_t k = 0; k < s.features.size(); ++k) s.features[k] = 10.0 * g(rng) + static_cast<double>(k);
    const int area = static_cast<int>(i % 5) + 1;
    s.features[0] += 15.0 * area;
    s.label.area = area;
    s.label.y_s = 20.0 + 2.0 * s.features[1] + 5.0 * g(rng);
    s.label.y_t = area == 5 ? 4.0 : std::clamp(2.0 + 0.05 * s.features[2], 0.0, 4.0);
    s.episode_id = static_cast<std::int64_t>(i / 4);
    s.frame_id = static_cast<std::int64_t>(i);
    d.samples.push_back(s);
  }
  return d;
}

TrainConfig small_config() {
  TrainConfig c;
  c.hidden = {24, 24};
  c.dropout = 0.0;
  c.batch_size = 16;
  c.epochs = 20;
  c.patience = 0;
  c.seed = 3;
  c.optimizer.learning_rate = 3e-3;
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("simp_test_trainer_" + name);
}

}  // namespace

TEST_CASE("default configuration: 3x400 tanh, dropout 0.5, 35 outputs") {
  const TrainConfig c;
  CHECK(c.hidden == std::vector<std::size_t>{400, 400, 400});
  CHECK(c.dropout == 0.5);
  CHECK(c.layout().raw_size() == 35);
  const auto model = initial_model(toy_dataset(10, 1), c);
  CHECK(model.net.output_dim() == 35);
  CHECK(model.net.input_dim() == 25);
  REQUIRE(model.net.layers().size() == 4);
  for (std::size_t k = 0; k < 3; ++k) CHECK(model.net.layers()[k].activation == nn::Activation::tanh);
  CHECK(model.net.layers()[3].activation == nn::Activation::identity);
}

TEST_CASE("config validation and JSON round trip") {
  TrainConfig c = small_config();
  c.loss = {0.5, 2.0};
  nlohmann::json j = c;
  CHECK(j.at("w1") == 0.5);
  const auto back = j.get<TrainConfig>();
  CHECK(back.hidden == c.hidden);
  CHECK(back.loss.cross_entropy == 2.0);
  CHECK(back.backend == c.backend);
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("normalization uses train-set statistics") {
  const auto d = toy_dataset(40, 2);
  const auto n = fit_normalization(d.samples);
  double mean0 = 0.0;
  for (const auto& s : d.samples) mean0 += s.features[0] / 40.0;
  CHECK(n.mean[0] == doctest::Approx(mean0).epsilon(1e-12));
  data::Dataset constant = d;
  for (auto& s : constant.samples) s.features[7] = 3.0;
  CHECK(fit_normalization(constant.samples).stddev[7] == 1.0);
  CHECK(normalization_hash(n) == normalization_hash(n));
  auto other = n;
  other.mean[3] = std::nextafter(other.mean[3], 1e9);
  CHECK(normalization_hash(other) != normalization_hash(n));
}

TEST_CASE("zero epochs return the initialization") {
  const auto d = toy_dataset(30, 4);
  auto c = small_config();
  c.epochs = 0;
  const auto result = train::train(d, nullptr, c);
  CHECK(result.model == initial_model(d, c));
  CHECK(result.log.empty());
  CHECK(result.best_epoch == 0);
}

TEST_CASE("an all-zero network predicts uniform area weights") {
  auto model = initial_model(toy_dataset(10, 1), small_config());
  for (auto& layer : model.net.layers()) {
    std::fill(layer.weights.values.begin(), layer.weights.values.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  const auto p = model.predict(toy_dataset(1, 9).samples[0].features);
  for (double w : p.weights()) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("predict: deterministic, valid, and rejects wrong widths") {
  auto c = small_config();
  c.dropout = 0.5;
  const auto d = toy_dataset(20, 5);
  const auto model = train::train(d, nullptr, c).model;
  const auto& f = d.samples[3].features;
  const auto a = model.predict(f);
  const auto b = model.predict(f);
  CHECK(a.weights() == b.weights());
  CHECK(a.valid());
  const auto batch = model.predict_batch(d.samples);
  CHECK(batch[3].weights() == a.weights());
  CHECK_THROWS_AS(model.predict(std::vector<double>(24, 0.0)), InputError);
}

TEST_CASE("training is deterministic under a seed") {
  const auto d = toy_dataset(50, 6);
  auto c = small_config();
  c.dropout = 0.3;
  c.epochs = 5;
  const auto a = train::train(d, nullptr, c);
  const auto b = train::train(d, nullptr, c);
  CHECK(a.model == b.model);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].train.total == b.log[i].train.total);
  c.seed = 4;
  CHECK_FALSE(train::train(d, nullptr, c).model == a.model);
}

TEST_CASE("the log records both loss components and the weighted total") {
  const auto d = toy_dataset(40, 7);
  auto c = small_config();
  c.loss = {2.0, 0.5};
  c.epochs = 3;
  const auto val = toy_dataset(10, 8);
  const auto r = train::train(d, &val, c);
  REQUIRE(r.log.size() == 3);
  for (const auto& e : r.log) {
    CHECK(e.train.total == doctest::Approx(2.0 * e.train.likelihood + 0.5 * e.train.cross_entropy));
    REQUIRE(e.validation.has_value());
    REQUIRE(e.validation_accuracy.has_value());
    const auto j = train::to_json(e);
    CHECK(j.contains("train_w1_term"));
    CHECK(j.contains("validation_total"));
    CHECK_FALSE(j.contains("seconds"));
  }
}

TEST_CASE("best checkpoint and early stopping on validation loss") {
  const auto d = toy_dataset(40, 9);
  // Validation drawn from a different rule so it stops improving quickly.
  auto val = toy_dataset(20, 10);
  for (auto& s : val.samples) s.label.area = 1 + (s.label.area % 5);
  auto c = small_config();
  c.epochs = 200;
  c.patience = 5;
  const auto r = train::train(d, &val, c);
  CHECK(r.stopped_early);
  CHECK(r.log.size() == r.best_epoch + 5);
  if (r.best_epoch > 0) {
    CHECK(evaluate_loss(r.model, val.samples).total ==
          doctest::Approx(r.log[r.best_epoch - 1].validation->total).epsilon(1e-12));
  }
}

TEST_CASE("a 20-sample toy set is overfit") {
  const auto d = toy_dataset(20, 11);
  auto c = small_config();
  c.hidden = {64, 64};
  c.epochs = 500;
  const double initial = evaluate_loss(initial_model(d, c), d.samples).total;
  const auto r = train::train(d, nullptr, c);
  const double final_loss = evaluate_loss(r.model, d.samples).total;
  CHECK(final_loss < 0.1 * initial);
  CHECK(area_accuracy(r.model, d.samples) == 1.0);
}

TEST_CASE("moving average of the training loss is non-increasing on a smooth problem") {
  const auto d = toy_dataset(64, 12);
  auto c = small_config();
  c.hidden = {16};
  c.batch_size = 64;
  c.epochs = 300;
  c.optimizer.learning_rate = 1e-3;
  const auto r = train::train(d, nullptr, c);
  REQUIRE(r.log.size() == 300);
  const std::size_t window = 100;
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) sum += r.log[i].train.total;
  double previous = sum / window;
  std::size_t violations = 0;
  for (std::size_t i = window; i < r.log.size(); ++i) {
    sum += r.log[i].train.total - r.log[i - window].train.total;
    const double avg = sum / window;
    if (avg > previous) ++violations;
    previous = avg;
  }
  CHECK(violations == 0);
}

TEST_CASE("checkpoint round trip is bitwise and the normalization hash is enforced") {
  const auto d = toy_dataset(30, 13);
  auto c = small_config();
  c.epochs = 3;
  const auto model = train::train(d, nullptr, c).model;
  const auto path = temp_file("model.json");
  save_model(model, path);
  const auto loaded = load_model(path);
  CHECK(loaded == model);
  for (const auto& s : d.samples) {
    const auto a = model.predict(s.features);
    const auto b = loaded.predict(s.features);
    CHECK(a.weights() == b.weights());
    CHECK(a.areas[2].components[0].mu_t == b.areas[2].components[0].mu_t);
  }

  auto doc = model.to_json();
  doc["normalization"]["mean"][0] = doc["normalization"]["mean"][0].template get<double>() + 1.0;
  CHECK_THROWS_AS(Model::from_json(doc), DataError);
  auto wrong = model.to_json();
  wrong["format"] = "something-else";
  CHECK_THROWS_AS(Model::from_json(wrong), DataError);
  data::write_text_file(path, "{ not json");
  CHECK_THROWS_AS(load_model(path), DataError);
}

TEST_CASE("a diverging run aborts with the last good model") {
  const auto d = toy_dataset(30, 14);
  auto c = small_config();
  c.optimizer.kind = nn::OptimizerKind::sgd;
  c.optimizer.learning_rate = 1e150;
  c.optimizer.clip_norm = 0.0;
  c.epochs = 50;
  try {
    train::train(d, nullptr, c);
    FAIL("training should have aborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.epoch() >= 1);
    CHECK(e.last_good().net.output_dim() == 35);
    for (const auto& layer : e.last_good().net.layers())
      for (double w : layer.weights.values) CHECK(std::isfinite(w));
  }
}

TEST_CASE("train requires samples") {
  CHECK_THROWS_AS(train::train(data::Dataset{}, nullptr, small_config()), InputError);
}
