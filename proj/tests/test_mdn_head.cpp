#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "simp/error.hpp"
#include "simp/mixture.hpp"

using namespace simp;
using namespace simp::mdn;

namespace {

std::vector<double> random_raw(const MixtureLayout& layout, std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<double> raw(layout.raw_size());
  for (double& v : raw) v = u(rng);
  return raw;
}

std::vector<oracle::ld> to_ld(std::span<const double> v) { return {v.begin(), v.end()}; }

oracle::Truth oracle_truth(const Truth& t) { return {t.area_probs, t.target.s, t.target.t}; }

}  // namespace

TEST_CASE("constrain: all-zero raw output") {
  const MixtureLayout layout{5, 1};
  const auto p = constrain(std::vector<double>(layout.raw_size(), 0.0), layout);
  REQUIRE(p.areas.size() == 5);
  for (const auto& a : p.areas) {
    CHECK(a.weight == doctest::Approx(0.2).epsilon(1e-15));
    REQUIRE(a.components.size() == 1);
    const auto& c = a.components[0];
    CHECK(c.alpha == 1.0);
    CHECK(c.sigma_s == 1.0);
    CHECK(c.sigma_t == 1.0);
    CHECK(c.mu_s == 0.0);
    CHECK(c.mu_t == 0.0);
    CHECK(c.rho == 0.0);
  }
  CHECK(p.valid());
}

TEST_CASE("constrain: sigma logit ln 2 gives sigma 2; the floor applies to tiny sigmas") {
  const MixtureLayout layout{2, 1};
  std::vector<double> raw(layout.raw_size(), 0.0);
  raw[layout.index(0, 0, Field::sigma_s)] = std::log(2.0);
  raw[layout.index(1, 0, Field::sigma_t)] = -50.0;
  const auto p = constrain(raw, layout);
  CHECK(p.areas[0].components[0].sigma_s == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.areas[1].components[0].sigma_t == kSigmaFloor);
}

TEST_CASE("constrain: weight logits (1,0,0,0,0) match a scratch softmax") {
  const MixtureLayout layout{5, 1};
  std::vector<double> raw(layout.raw_size(), 0.0);
  raw[layout.weight_index(0)] = 1.0;
  const auto w = constrain(raw, layout).weights();
  const auto expect = oracle::softmax({1.0L, 0.0L, 0.0L, 0.0L, 0.0L});
  for (std::size_t a = 0; a < 5; ++a) CHECK(std::abs(w[a] - double(expect[a])) < 1e-15);
  CHECK(w[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 4.0)).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(0.4046).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.1488).epsilon(1e-3));
}

TEST_CASE("constrain: large logits keep every invariant") {
  const MixtureLayout layout{5, 3};
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = constrain(random_raw(layout, rng, 40.0), layout);
    CHECK(p.valid());
    for (const auto& a : p.areas)
      for (const auto& c : a.components) CHECK(std::abs(c.rho) < 1.0);
  }
  // Weight logits far apart may underflow some weights, but the rest stay on
  // the simplex; a sigma logit past exp's range is a numeric error.
  std::vector<double> raw(layout.raw_size(), 0.0);
  raw[layout.weight_index(0)] = 800.0;
  raw[layout.index(2, 1, Field::rho)] = -900.0;
  const auto p = constrain(raw, layout);
  CHECK(p.areas[0].weight == 1.0);
  CHECK(p.areas[2].components[1].rho > -1.0);
  raw[layout.index(1, 0, Field::sigma_t)] = 800.0;
  CHECK_THROWS_AS(constrain(raw, layout), NumericError);
}

TEST_CASE("constrain: errors") {
  const MixtureLayout layout{5, 1};
  std::vector<double> raw(layout.raw_size(), 0.0);
  CHECK_THROWS_AS(constrain(std::vector<double>(34, 0.0), layout), StructuralError);
  raw[7] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(constrain(raw, layout), NumericError);
}

TEST_CASE("constrain: adding a constant to all weight logits changes nothing") {
  const MixtureLayout layout{5, 2};
  std::mt19937_64 rng(8);
  auto raw = random_raw(layout, rng);
  const auto before = constrain(raw, layout).weights();
  for (std::size_t a = 0; a < 5; ++a) raw[layout.weight_index(a)] += 37.5;
  const auto after = constrain(raw, layout).weights();
  for (std::size_t a = 0; a < 5; ++a) CHECK(std::abs(before[a] - after[a]) < 1e-12);
}

TEST_CASE("log_density: closed-form single-component cases") {
  const Component c{1.0, 12.0, 2.5, 3.0, 0.7, 0.4};
  const AreaMixture area{1.0, {c}};
  const MixtureParams p{{area}};
  const double at_mean = log_density(p, 0, {12.0, 2.5});
  CHECK(at_mean == doctest::Approx(-std::log(2 * std::numbers::pi * 3.0 * 0.7 * std::sqrt(1 - 0.16))).epsilon(1e-14));
  const MixtureParams unit{{{1.0, {Component{1.0, 0.0, 0.0, 1.0, 1.0, 0.0}}}}};
  CHECK(log_density(unit, 0, {1.0, 0.0}) == doctest::Approx(-std::log(2 * std::numbers::pi) - 0.5).epsilon(1e-14));
  CHECK(std::isfinite(log_density(unit, 0, {1e6, -1e6})));
}

TEST_CASE("log_density: two-component mixtures match a naive density") {
  const MixtureLayout layout{3, 2};
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = constrain(random_raw(layout, rng), layout);
    const std::size_t a = trial % 3;
    const MotionTarget y{u(rng), u(rng)};
    double direct = 0.0;
    for (const auto& c : p.areas[a].components)
      direct += c.alpha * oracle::naive_density(c.mu_s, c.mu_t, c.sigma_s, c.sigma_t, c.rho, y.s, y.t);
    CHECK(std::abs(std::exp(log_density(p, a, y)) - direct) < 1e-10 * std::max(1.0, direct));
    CHECK(log_density(p, a, y) == doctest::Approx(std::log(direct)).epsilon(1e-10));
  }
}

TEST_CASE("loss: single-sample example and uniform-weight cross entropy") {
  const MixtureLayout layout{2, 1};
  std::vector<double> raw(layout.raw_size(), 0.0);  // w = (0.5, 0.5), unit sigmas, zero means
  const auto truth = Truth::one_hot(2, 0, {0.0, 0.0});
  const auto p = constrain(raw, layout);
  const auto terms = simp_loss(std::span(&p, 1), std::span(&truth, 1), {1.0, 1.0});
  const double expect = double(oracle::loss(to_ld(raw), 2, 1, oracle_truth(truth), 1.0L, 1.0L));
  CHECK(terms.total == doctest::Approx(expect).epsilon(1e-14));
  // The likelihood term conditions on the true area only, so the predicted
  // weight enters through the cross-entropy term alone.
  CHECK(terms.likelihood == doctest::Approx(std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(terms.cross_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(terms.total == doctest::Approx(2.5310).epsilon(1e-4));

  const MixtureLayout five{5, 1};
  const auto p5 = constrain(std::vector<double>(five.raw_size(), 0.0), five);
  for (std::size_t a = 0; a < 5; ++a) {
    const auto t = Truth::one_hot(5, a, {3.0, 1.0});
    const auto l = simp_loss(std::span(&p5, 1), std::span(&t, 1), {1.0, 1.0});
    CHECK(l.cross_entropy == doctest::Approx(-std::log(0.2)).epsilon(1e-14));
    CHECK(l.cross_entropy == doctest::Approx(1.6094).epsilon(1e-4));
  }
}

TEST_CASE("loss: perfect area prediction drives the cross-entropy term to zero") {
  const MixtureLayout layout{5, 1};
  std::vector<double> raw(layout.raw_size(), 0.0);
  raw[layout.weight_index(2)] = 60.0;
  const auto p = constrain(raw, layout);
  const auto t = Truth::one_hot(5, 2, {0.0, 0.0});
  CHECK(simp_loss(std::span(&p, 1), std::span(&t, 1), {1.0, 1.0}).cross_entropy < 1e-20);
}

TEST_CASE("loss: each weight set to zero leaves the other component") {
  const MixtureLayout layout{5, 1};
  std::mt19937_64 rng(3);
  std::vector<MixtureParams> params;
  std::vector<Truth> truths;
  double nll = 0.0, ce = 0.0;
  for (int n = 0; n < 20; ++n) {
    params.push_back(constrain(random_raw(layout, rng), layout));
    const std::size_t a = n % 5;
    truths.push_back(Truth::one_hot(5, a, {0.1 * n, 0.05 * n}));
    nll -= log_density(params.back(), a, truths.back().target);
    ce -= std::log(params.back().areas[a].weight);
  }
  const auto only_nll = simp_loss(params, truths, {1.0, 0.0});
  const auto only_ce = simp_loss(params, truths, {0.0, 1.0});
  CHECK(only_nll.total == doctest::Approx(only_nll.likelihood).epsilon(1e-14));
  CHECK(only_ce.total == doctest::Approx(ce).epsilon(1e-12));
  CHECK(only_nll.total == doctest::Approx(nll).epsilon(1e-12));
}

namespace {

struct FdOutcome {
  std::size_t checked = 0;
  std::size_t failures = 0;
};

// Central differences of the extended-precision loss against the analytic
// gradient of one raw output.
FdOutcome check_raw_gradient(const std::vector<double>& raw, const Truth& truth,
                             const MixtureLayout& layout, LossWeights w) {
  std::vector<double> grad(raw.size());
  loss_and_gradient(raw, truth, layout, w, grad);
  const auto ot = oracle_truth(truth);
  FdOutcome out;
  const double h = 1e-5;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto up = to_ld(raw), down = to_ld(raw);
    up[i] += h;
    down[i] -= h;
    const auto numeric = double((oracle::loss(up, layout.areas, layout.components, ot, w.likelihood, w.cross_entropy) -
                                 oracle::loss(down, layout.areas, layout.components, ot, w.likelihood, w.cross_entropy)) /
                                (2.0L * h));
    ++out.checked;
    if (!oracle::gradient_close(grad[i], numeric)) ++out.failures;
  }
  return out;
}

}  // namespace

TEST_CASE("loss_and_gradient: value matches the scratch loss") {
  const MixtureLayout layout{5, 2};
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = random_raw(layout, rng);
    const auto truth = Truth::one_hot(5, trial % 5, {0.3 * trial - 2.0, 0.1 * trial});
    std::vector<double> grad(raw.size());
    const auto terms = loss_and_gradient(raw, truth, layout, {0.7, 1.3}, grad);
    const double expect = double(oracle::loss(to_ld(raw), 5, 2, oracle_truth(truth), 0.7L, 1.3L));
    CHECK(terms.total == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("loss_and_gradient: central differences on 120 random instances") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> target(-1.5, 1.5);
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  FdOutcome total;
  for (int trial = 0; trial < 120; ++trial) {
    const MixtureLayout layout{5, trial % 3 == 0 ? std::size_t{2} : std::size_t{1}};
    const auto raw = random_raw(layout, rng);
    const auto truth = Truth::one_hot(5, static_cast<std::size_t>(trial) % 5, {target(rng), target(rng)});
    const auto r = check_raw_gradient(raw, truth, layout, {weight(rng), weight(rng)});
    total.checked += r.checked;
    total.failures += r.failures;
  }
  CHECK(total.checked > 4000);
  CHECK(total.failures == 0);
}

TEST_CASE("loss_and_gradient: batch gradient is the sum of per-sample gradients") {
  const MixtureLayout layout{5, 1};
  std::mt19937_64 rng(29);
  Matrix raw(6, layout.raw_size());
  std::vector<Truth> truths;
  for (std::size_t n = 0; n < 6; ++n) {
    const auto r = random_raw(layout, rng);
    std::copy(r.begin(), r.end(), raw.row(n).begin());
    truths.push_back(Truth::one_hot(5, n % 5, {0.1 * double(n), 0.2}));
  }
  const auto batch = loss_gradient(raw, truths, layout, {1.0, 1.0});
  double sum = 0.0;
  for (std::size_t n = 0; n < 6; ++n) {
    std::vector<double> g(layout.raw_size());
    sum += loss_and_gradient(raw.row(n), truths[n], layout, {1.0, 1.0}, g).total;
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(batch.gradient(n, i) == g[i]);
  }
  CHECK(batch.terms.total == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("loss_and_gradient: symmetry and sign checks") {
  const MixtureLayout layout{5, 1};
  std::vector<double> grad(layout.raw_size());
  const auto zero = std::vector<double>(layout.raw_size(), 0.0);
  loss_and_gradient(zero, Truth::one_hot(5, 1, {0.0, 0.0}), layout, {1.0, 1.0}, grad);
  for (std::size_t a = 0; a < 5; ++a) {
    CHECK(grad[layout.index(a, 0, Field::mu_s)] == 0.0);
    CHECK(grad[layout.index(a, 0, Field::mu_t)] == 0.0);
  }

  // True area below uniform weight with the cross-entropy term dominating.
  auto raw = zero;
  raw[layout.weight_index(3)] = -1.0;
  loss_and_gradient(raw, Truth::one_hot(5, 3, {0.5, 0.5}), layout, {0.01, 1.0}, grad);
  CHECK(grad[layout.weight_index(3)] < 0.0);
  for (std::size_t a = 0; a < 5; ++a)
    if (a != 3) CHECK(grad[layout.weight_index(a)] > 0.0);
}

TEST_CASE("loss_and_gradient: errors") {
  const MixtureLayout layout{5, 1};
  std::vector<double> grad(layout.raw_size());
  auto raw = std::vector<double>(layout.raw_size(), 0.0);
  CHECK_THROWS_AS(loss_and_gradient(raw, Truth::one_hot(4, 1, {0, 0}), layout, {1, 1}, grad),
                  StructuralError);
  raw[3] = std::nan("");
  CHECK_THROWS_AS(loss_and_gradient(raw, Truth::one_hot(5, 1, {0, 0}), layout, {1, 1}, grad),
                  NumericError);
}

TEST_CASE("allocate_counts: largest remainder with ties to lower indices") {
  CHECK(allocate_counts(std::vector<double>{0.5, 0.3, 0.2}, 10) == std::vector<std::size_t>{5, 3, 2});
  CHECK(allocate_counts(std::vector<double>{0.5, 0.5}, 3) == std::vector<std::size_t>{2, 1});
  CHECK(allocate_counts(std::vector<double>{0.34, 0.33, 0.33}, 50) == std::vector<std::size_t>{17, 17, 16});
  CHECK(allocate_counts(std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.2}, 0) == std::vector<std::size_t>(5, 0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(5);
    for (double& x : w) x = u(rng);
    const auto c = allocate_counts(w, 50);
    CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == 50);
  }
}

TEST_CASE("sample: counts, single-area mass and grouping") {
  const MixtureLayout layout{5, 1};
  std::mt19937_64 rng(2);
  const auto p = constrain(std::vector<double>(layout.raw_size(), 0.0), layout);
  CHECK(sample(p, 0, rng).empty());
  auto p_one = p;
  p_one.areas[0].weight = 1.0;
  for (std::size_t a = 1; a < 5; ++a) p_one.areas[a].weight = 0.0;
  const auto points = sample(p_one, 50, rng);
  REQUIRE(points.size() == 50);
  for (const auto& pt : points) CHECK(pt.area == 0);
  const auto mixed = sample(p, 50, rng);
  for (std::size_t i = 1; i < mixed.size(); ++i) CHECK(mixed[i - 1].area <= mixed[i].area);
}

TEST_CASE("sample: mean of 10^4 draws within three standard errors") {
  const Component c{1.0, 40.0, 2.0, 0.05, 0.02, -0.6};
  const AreaMixture area{1.0, {c}};
  std::mt19937_64 rng(5);
  const int n = 10000;
  double ms = 0.0, mt = 0.0, cov = 0.0;
  std::vector<MotionTarget> draws;
  for (int i = 0; i < n; ++i) draws.push_back(sample_area(area, rng));
  for (const auto& d : draws) {
    ms += d.s / n;
    mt += d.t / n;
  }
  for (const auto& d : draws) cov += (d.s - ms) * (d.t - mt) / (n - 1);
  CHECK(std::abs(ms - c.mu_s) < 3 * c.sigma_s / std::sqrt(double(n)));
  CHECK(std::abs(mt - c.mu_t) < 3 * c.sigma_t / std::sqrt(double(n)));
  CHECK(cov / (c.sigma_s * c.sigma_t) == doctest::Approx(c.rho).epsilon(0.05));
}

TEST_CASE("log_density integrates to one under importance sampling") {
  const MixtureLayout layout{5, 2};
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = constrain(random_raw(layout, rng), layout);
    for (std::size_t a = 0; a < 5; ++a) {
      const auto ms = marginal_s(p.areas[a]);
      const auto mt = marginal_t(p.areas[a]);
      std::normal_distribution<double> qs(ms.mean, 2 * ms.stddev), qt(mt.mean, 2 * mt.stddev);
      const int n = 100000;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double s = qs(rng), t = qt(rng);
        const double zs = (s - ms.mean) / (2 * ms.stddev), zt = (t - mt.mean) / (2 * mt.stddev);
        const double log_q = -std::log(2 * std::numbers::pi * 4 * ms.stddev * mt.stddev) - 0.5 * (zs * zs + zt * zt);
        acc += std::exp(log_density(p, a, {s, t}) - log_q);
      }
      CHECK(acc / n == doctest::Approx(1.0).epsilon(0.01));
    }
  }
}

TEST_CASE("marginal moments of a two-component area") {
  const AreaMixture area{1.0, {Component{0.25, 0.0, 1.0, 1.0, 0.5, 0.0}, Component{0.75, 4.0, 3.0, 2.0, 0.5, 0.3}}};
  const auto ms = marginal_s(area);
  CHECK(ms.mean == doctest::Approx(3.0));
  // E[s^2] = 0.25 * 1 + 0.75 * (4 + 16) = 15.25
  CHECK(ms.stddev == doctest::Approx(std::sqrt(15.25 - 9.0)));
  CHECK(marginal_t(area).mean == doctest::Approx(2.5));
}
