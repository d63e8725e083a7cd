#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "simp/dense_net.hpp"
#include "simp/error.hpp"
#include "simp/optimizer.hpp"

using namespace simp;
using nn::Activation;
using nn::DenseNet;
using nn::Mode;

namespace {

DenseNet random_net(std::vector<std::size_t> dims, std::uint64_t seed, double dropout = 0.0,
                    double scale = 1.0) {
  auto net = DenseNet::glorot(dims, Activation::tanh, Activation::identity, dropout, seed);
  std::mt19937_64 rng(seed * 31 + 1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& layer : net.layers()) {
    for (double& w : layer.weights.values) w *= scale;
    for (double& b : layer.bias) b = u(rng);
  }
  return net;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("forward: zero parameters give a zero output") {
  std::vector<nn::DenseLayer> layers;
  layers.push_back({Matrix(3, 4), std::vector<double>(4, 0.0), Activation::tanh});
  layers.push_back({Matrix(4, 2), std::vector<double>(2, 0.0), Activation::identity});
  const DenseNet net(layers, 0.0, 1);
  const auto out = net.forward(std::vector<double>{1.5, -2.0, 7.0}, Mode::infer).output;
  CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("forward: identity layer passes the input through") {
  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const DenseNet net({{eye, std::vector<double>(3, 0.0), Activation::identity}}, 0.0, 1);
  const std::vector<double> v{0.25, -3.0, 8.5};
  CHECK(net.forward(v, Mode::infer).output == v);
}

TEST_CASE("forward: random 2-3-2 net matches a scratch recomputation") {
  const auto net = random_net({2, 3, 2}, 11);
  const std::vector<double> x{0.3, -1.7};
  const auto out = net.forward(x, Mode::infer).output;
  const auto expect = oracle::forward(net, x);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - double(expect[i])) < 1e-12);
}

TEST_CASE("forward: batched openmp and reference paths agree with single-sample forward") {
  const auto net = random_net({6, 9, 9, 4}, 5);
  Matrix x(11, 6);
  x.values = random_vector(66, 6);
  const auto a = net.forward(x, Mode::infer, nullptr, kernels::Backend::reference).output;
  const auto b = net.forward(x, Mode::infer, nullptr, kernels::Backend::openmp).output;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto single = net.forward(x.row(r), Mode::infer).output;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(a(r, j) == doctest::Approx(single[j]).epsilon(1e-12));
      CHECK(b(r, j) == doctest::Approx(single[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward: errors") {
  const auto net = random_net({3, 4, 2}, 1, 0.5);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}, Mode::infer), StructuralError);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, std::nan(""), 0.0}, Mode::infer), InputError);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0, 3.0}, Mode::train, nullptr),
                  StructuralError);
  std::vector<nn::DenseLayer> bad;
  bad.push_back({Matrix(3, 4), std::vector<double>(4), Activation::tanh});
  bad.push_back({Matrix(5, 2), std::vector<double>(2), Activation::identity});
  CHECK_THROWS_AS(DenseNet(bad, 0.0, 1), StructuralError);
}

TEST_CASE("forward: infer mode is deterministic even with dropout configured") {
  const auto net = random_net({4, 8, 3}, 2, 0.5);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  CHECK(net.forward(x, Mode::infer).output == net.forward(x, Mode::infer).output);
}

TEST_CASE("backward: identity net gives g outer x") {
  Matrix w(3, 2);
  w.values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const DenseNet net({{w, std::vector<double>(2, 0.0), Activation::identity}}, 0.0, 1);
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> g{3.0, -1.0};
  const auto fwd = net.forward(x, Mode::infer);
  const auto grads = net.backward(fwd.tape, g);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(grads.weights[0](i, j) == doctest::Approx(x[i] * g[j]));
  CHECK(grads.biases[0] == g);
}

TEST_CASE("backward: zero output gradient gives zero gradients") {
  const auto net = random_net({4, 8, 8, 7}, 3);
  const auto fwd = net.forward(random_vector(4, 4), Mode::infer);
  const auto grads = net.backward(fwd.tape, std::vector<double>(7, 0.0));
  CHECK(grads.squared_norm() == 0.0);
}

TEST_CASE("backward: analytic gradients match central differences on 4-8-8-7 nets") {
  const double h = 1e-5;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    auto net = random_net({4, 8, 8, 7}, 100 + trial);
    const auto x = random_vector(4, 200 + trial, -2.0, 2.0);
    const auto c = random_vector(7, 300 + trial);
    // Scalar objective L = c . output, so dL/doutput = c.
    const auto grads = net.backward(net.forward(x, Mode::infer).tape, c);
    auto objective = [&](const DenseNet& n) {
      const auto out = oracle::forward(n, x);
      oracle::ld sum = 0.0L;
      for (std::size_t i = 0; i < out.size(); ++i) sum += out[i] * c[i];
      return sum;
    };
    std::size_t checked = 0, failures = 0;
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      auto probe = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = p;
        const auto f_up = objective(net);
        p = saved - h;
        const double down = p;
        const auto f_down = objective(net);
        p = saved;
        const double numeric = static_cast<double>((f_up - f_down) / (oracle::ld(up) - down));
        ++checked;
        if (!oracle::gradient_close(analytic, numeric)) ++failures;
      };
      auto& layer = net.layers()[k];
      for (std::size_t i = 0; i < layer.weights.values.size(); ++i) probe(layer.weights.values[i], grads.weights[k].values[i]);
      for (std::size_t j = 0; j < layer.bias.size(); ++j) probe(layer.bias[j], grads.biases[k][j]);
    }
    CHECK(checked == 4 * 8 + 8 + 8 * 8 + 8 + 8 * 7 + 7);
    CHECK(failures == 0);
  }
}

TEST_CASE("backward: tape from another network is rejected") {
  const auto a = random_net({4, 8, 3}, 1);
  const auto b = random_net({4, 6, 3}, 1);
  const auto fwd = a.forward(random_vector(4, 1), Mode::infer);
  CHECK_THROWS_AS(b.backward(fwd.tape, std::vector<double>(3, 1.0)), StructuralError);
  CHECK_THROWS_AS(a.backward(fwd.tape, std::vector<double>(2, 1.0)), StructuralError);
}

TEST_CASE("dropout: mean of train-mode outputs over 10^4 masks matches infer mode") {
  const auto net = random_net({5, 16, 16, 3}, 9, 0.5);
  const auto x = random_vector(5, 10);
  const auto infer = net.forward(x, Mode::infer).output;
  nn::Rng rng(12);
  std::vector<double> mean(3, 0.0);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto out = net.forward(x, Mode::train, &rng).output;
    for (std::size_t i = 0; i < 3; ++i) mean[i] += out[i] / draws;
  }
  double scale = 0.0;
  for (double v : infer) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(mean[i] - infer[i]) <= 0.02 * scale);
}

TEST_CASE("dropout: train mode masks roughly the configured share and scales survivors") {
  const auto net = random_net({5, 200, 2}, 4, 0.25);
  nn::Rng rng(3);
  const auto fwd = net.forward(random_vector(5, 5), Mode::train, &rng);
  const auto& mask = fwd.tape.dropout_mask;
  REQUIRE(mask.values.size() == 200);
  std::size_t zeros = 0;
  for (double m : mask.values) {
    if (m == 0.0) ++zeros;
    else CHECK(m == doctest::Approx(1.0 / 0.75));
  }
  CHECK(zeros > 25);
  CHECK(zeros < 75);
}

TEST_CASE("sgd_step: lr 0 leaves parameters unchanged; scalar example") {
  auto net = random_net({3, 4, 2}, 8);
  const auto before = net;
  auto grads = net.backward(net.forward(random_vector(3, 1), Mode::infer).tape, std::vector<double>{1.0, -1.0});
  nn::sgd_step(net, grads, 0.0);
  CHECK(net == before);

  DenseNet scalar({{Matrix(1, 1, 1.0), std::vector<double>{0.0}, Activation::identity}}, 0.0, 1);
  auto g = scalar.zero_gradients();
  g.weights[0](0, 0) = 2.0;
  nn::sgd_step(scalar, g, 0.1);
  CHECK(scalar.layers()[0].weights(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sgd_step and Adam: non-finite gradients raise a numeric error and leave the net intact") {
  auto net = random_net({3, 4, 2}, 8);
  const auto before = net;
  auto g = net.zero_gradients();
  g.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nn::sgd_step(net, g, 0.1), NumericError);
  nn::Optimizer adam;
  CHECK_THROWS_AS(adam.step(net, g), NumericError);
  CHECK(net == before);
}

TEST_CASE("global-norm clipping caps the update") {
  auto net = random_net({2, 2}, 1);
  auto g = net.zero_gradients();
  g.weights[0].values = {30.0, 40.0, 0.0, 0.0};
  const double norm = nn::clip_global_norm(g, 10.0);
  CHECK(norm == doctest::Approx(50.0));
  CHECK(std::sqrt(g.squared_norm()) == doctest::Approx(10.0));
}

TEST_CASE("a small step lowers the loss on a fixed batch, for SGD and Adam") {
  for (auto kind : {nn::OptimizerKind::sgd, nn::OptimizerKind::adam}) {
    auto net = random_net({4, 8, 2}, 21);
    const auto x = random_vector(4, 22);
    const std::vector<double> target{0.7, -0.3};
    auto loss_and_grad = [&](const DenseNet& n, std::vector<double>* grad) {
      const auto out = n.forward(x, Mode::infer).output;
      double l = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        l += 0.5 * (out[i] - target[i]) * (out[i] - target[i]);
        if (grad) (*grad)[i] = out[i] - target[i];
      }
      return l;
    };
    std::vector<double> g(2);
    const double before = loss_and_grad(net, &g);
    auto grads = net.backward(net.forward(x, Mode::infer).tape, g);
    nn::OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.learning_rate = 1e-3;
    nn::Optimizer opt(cfg);
    opt.step(net, grads);
    CHECK(loss_and_grad(net, nullptr) < before);
  }
}

TEST_CASE("identical seeds give bitwise-identical parameters after several Adam steps") {
  auto run = [] {
    auto net = DenseNet::glorot(std::vector<std::size_t>{5, 12, 3}, Activation::tanh,
                                Activation::identity, 0.5, 77);
    nn::Optimizer opt;
    nn::Rng rng(78);
    Matrix x(16, 5);
    x.values = random_vector(80, 79);
    Matrix g(16, 3);
    g.values = random_vector(48, 80);
    for (int step = 0; step < 10; ++step) {
      const auto fwd = net.forward(x, Mode::train, &rng);
      opt.step(net, net.backward(fwd.tape, g));
    }
    return net;
  };
  CHECK(run() == run());
}

TEST_CASE("serialization round-trips bit-exactly") {
  const auto net = random_net({25, 40, 35}, 31, 0.5);
  const auto text = net.to_json().dump();
  const auto back = DenseNet::from_json(nlohmann::json::parse(text));
  CHECK(back == net);
  CHECK(back.to_json().dump() == text);
  const auto doc = net.to_json();
  CHECK(doc.at("format_version") == nn::kModelFormatVersion);
  CHECK(doc.at("layers").at(0).at("activation") == "tanh");
  CHECK(doc.at("dropout_rate") == 0.5);

  auto broken = doc;
  broken["layers"][0]["weights"].erase(0);
  CHECK_THROWS(DenseNet::from_json(broken));
  auto wrong_version = doc;
  wrong_version["format_version"] = 99;
  CHECK_THROWS_AS(DenseNet::from_json(wrong_version), DataError);
}
