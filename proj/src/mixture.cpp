#include "simp/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "simp/error.hpp"

namespace simp::mdn {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

/// Softmax of values[offset + k * stride] for k in [0, n).
void softmax_strided(std::span<const double> raw, std::size_t offset, std::size_t stride,
                     std::size_t n, std::span<double> out) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) peak = std::max(peak, raw[offset + k * stride]);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::exp(raw[offset + k * stride] - peak);
    sum += out[k];
  }
  for (std::size_t k = 0; k < n; ++k) out[k] /= sum;
}

struct Standardized {
  double ds, dt, one_minus_rho2, quad;
};

Standardized standardize(const Component& c, MotionTarget y) {
  Standardized z{};
  z.ds = (y.s - c.mu_s) / c.sigma_s;
  z.dt = (y.t - c.mu_t) / c.sigma_t;
  z.one_minus_rho2 = 1.0 - c.rho * c.rho;
  z.quad = (z.ds * z.ds - 2.0 * c.rho * z.ds * z.dt + z.dt * z.dt) / z.one_minus_rho2;
  return z;
}

void check_layout(std::span<const double> raw, const MixtureLayout& layout) {
  if (layout.areas == 0 || layout.components == 0) {
    throw StructuralError("mixture layout needs at least one area and one component");
  }
  if (raw.size() != layout.raw_size()) {
    throw StructuralError("raw output has " + std::to_string(raw.size()) +
                          " values, layout expects " + std::to_string(layout.raw_size()));
  }
}

void check_truth(const Truth& truth, std::size_t areas) {
  if (truth.area_probs.size() != areas) {
    throw StructuralError("truth has " + std::to_string(truth.area_probs.size()) +
                          " area probabilities, expected " + std::to_string(areas));
  }
  double mass = 0.0;
  for (double p : truth.area_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("truth area probabilities must be >= 0");
    mass += p;
  }
  if (!(mass > 0.0)) throw InputError("truth assigns no mass to any area");
  if (!std::isfinite(truth.target.s) || !std::isfinite(truth.target.t)) {
    throw InputError("non-finite motion target");
  }
}

}  // namespace

std::vector<double> MixtureParams::weights() const {
  std::vector<double> w;
  w.reserve(areas.size());
  for (const auto& a : areas) w.push_back(a.weight);
  return w;
}

bool MixtureParams::valid(double tolerance) const {
  double weight_sum = 0.0;
  for (const auto& area : areas) {
    if (!(area.weight > 0.0)) return false;
    weight_sum += area.weight;
    double alpha_sum = 0.0;
    for (const auto& c : area.components) {
      if (!(c.alpha > 0.0) || !(c.sigma_s > 0.0) || !(c.sigma_t > 0.0)) return false;
      if (!(std::abs(c.rho) < 1.0)) return false;
      if (!std::isfinite(c.mu_s) || !std::isfinite(c.mu_t)) return false;
      // Covariance determinant sigma_s^2 sigma_t^2 (1 - rho^2) must be positive.
      const double det = c.sigma_s * c.sigma_s * c.sigma_t * c.sigma_t * (1.0 - c.rho * c.rho);
      if (!(det > 0.0)) return false;
      alpha_sum += c.alpha;
    }
    if (std::abs(alpha_sum - 1.0) > tolerance) return false;
  }
  return !areas.empty() && std::abs(weight_sum - 1.0) <= tolerance;
}

Truth Truth::one_hot(std::size_t areas, std::size_t area, MotionTarget target) {
  if (area >= areas) throw InputError("area index out of range");
  Truth t;
  t.area_probs.assign(areas, 0.0);
  t.area_probs[area] = 1.0;
  t.target = target;
  return t;
}

LossTerms& LossTerms::operator+=(const LossTerms& other) {
  likelihood += other.likelihood;
  cross_entropy += other.cross_entropy;
  total += other.total;
  return *this;
}

MixtureParams constrain(std::span<const double> raw, const MixtureLayout& layout) {
  check_layout(raw, layout);
  for (double v : raw) {
    if (!std::isfinite(v)) throw NumericError("constrain: non-finite raw output");
  }
  const std::size_t block = layout.block_size();
  std::vector<double> weights(layout.areas);
  softmax_strided(raw, 0, block, layout.areas, weights);

  MixtureParams params;
  params.areas.resize(layout.areas);
  std::vector<double> alphas(layout.components);
  for (std::size_t a = 0; a < layout.areas; ++a) {
    auto& area = params.areas[a];
    area.weight = weights[a];
    softmax_strided(raw, layout.index(a, 0, Field::alpha), 6, layout.components, alphas);
    area.components.resize(layout.components);
    for (std::size_t m = 0; m < layout.components; ++m) {
      auto& c = area.components[m];
      c.alpha = alphas[m];
      c.mu_s = raw[layout.index(a, m, Field::mu_s)];
      c.mu_t = raw[layout.index(a, m, Field::mu_t)];
      c.sigma_s = std::max(std::exp(raw[layout.index(a, m, Field::sigma_s)]), kSigmaFloor);
      c.sigma_t = std::max(std::exp(raw[layout.index(a, m, Field::sigma_t)]), kSigmaFloor);
      c.rho = std::clamp(std::tanh(raw[layout.index(a, m, Field::rho)]), -kRhoLimit, kRhoLimit);
      if (!std::isfinite(c.sigma_s) || !std::isfinite(c.sigma_t)) {
        throw NumericError("constrain: sigma overflow");
      }
    }
  }
  return params;
}

double component_log_density(const Component& c, MotionTarget y) {
  const auto z = standardize(c, y);
  return -kLog2Pi - std::log(c.sigma_s) - std::log(c.sigma_t) - 0.5 * std::log(z.one_minus_rho2) -
         0.5 * z.quad;
}

double log_density(const MixtureParams& params, std::size_t area, MotionTarget y) {
  if (area >= params.areas.size()) throw InputError("log_density: area index out of range");
  const auto& components = params.areas[area].components;
  std::vector<double> terms(components.size());
  for (std::size_t m = 0; m < components.size(); ++m) {
    terms[m] = std::log(components[m].alpha) + component_log_density(components[m], y);
  }
  return log_sum_exp(terms);
}

LossTerms simp_loss(std::span<const MixtureParams> params, std::span<const Truth> truths,
                    LossWeights weights) {
  if (params.size() != truths.size()) throw StructuralError("simp_loss: batch sizes differ");
  LossTerms terms;
  std::vector<double> joint;
  for (std::size_t n = 0; n < params.size(); ++n) {
    const auto& p = params[n];
    const auto& truth = truths[n];
    check_truth(truth, p.areas.size());
    joint.clear();
    for (std::size_t a = 0; a < p.areas.size(); ++a) {
      const double prob = truth.area_probs[a];
      if (prob <= 0.0) continue;
      joint.push_back(std::log(prob) + log_density(p, a, truth.target));
      terms.cross_entropy -= prob * std::log(std::max(p.areas[a].weight, kLogFloor));
    }
    terms.likelihood -= log_sum_exp(joint);
  }
  terms.total = weights.likelihood * terms.likelihood + weights.cross_entropy * terms.cross_entropy;
  return terms;
}

LossTerms loss_and_gradient(std::span<const double> raw, const Truth& truth,
                            const MixtureLayout& layout, LossWeights weights,
                            std::span<double> gradient) {
  check_layout(raw, layout);
  check_truth(truth, layout.areas);
  if (gradient.size() != raw.size()) throw StructuralError("gradient buffer size mismatch");

  const MixtureParams params = constrain(raw, layout);
  const std::size_t n_areas = layout.areas;
  const std::size_t n_comp = layout.components;
  std::fill(gradient.begin(), gradient.end(), 0.0);

  // Per-area log mixture density and per-component log joint terms.
  std::vector<double> log_f(n_areas, 0.0);
  std::vector<double> comp_terms(n_areas * n_comp, 0.0);
  std::vector<double> joint;
  joint.reserve(n_areas);
  for (std::size_t a = 0; a < n_areas; ++a) {
    if (truth.area_probs[a] <= 0.0) continue;
    const auto& comps = params.areas[a].components;
    for (std::size_t m = 0; m < n_comp; ++m) {
      comp_terms[a * n_comp + m] =
          std::log(comps[m].alpha) + component_log_density(comps[m], truth.target);
    }
    log_f[a] = log_sum_exp(std::span<const double>(comp_terms).subspan(a * n_comp, n_comp));
    joint.push_back(std::log(truth.area_probs[a]) + log_f[a]);
  }

  LossTerms terms;
  const double log_mix = log_sum_exp(joint);
  terms.likelihood = -log_mix;

  const double w1 = weights.likelihood;
  const double w2 = weights.cross_entropy;
  for (std::size_t a = 0; a < n_areas; ++a) {
    if (truth.area_probs[a] <= 0.0) continue;
    const double resp = std::exp(std::log(truth.area_probs[a]) + log_f[a] - log_mix);
    const auto& comps = params.areas[a].components;
    for (std::size_t m = 0; m < n_comp; ++m) {
      const auto& c = comps[m];
      const double gamma = std::exp(comp_terms[a * n_comp + m] - log_f[a]);
      const double scale = -w1 * resp * gamma;  // d(loss)/d(log N_m) contribution
      const auto z = standardize(c, truth.target);

      gradient[layout.index(a, m, Field::alpha)] += -w1 * resp * (gamma - c.alpha);
      gradient[layout.index(a, m, Field::mu_s)] +=
          scale * (z.ds - c.rho * z.dt) / (z.one_minus_rho2 * c.sigma_s);
      gradient[layout.index(a, m, Field::mu_t)] +=
          scale * (z.dt - c.rho * z.ds) / (z.one_minus_rho2 * c.sigma_t);
      if (std::exp(raw[layout.index(a, m, Field::sigma_s)]) > kSigmaFloor) {
        gradient[layout.index(a, m, Field::sigma_s)] +=
            scale * (-1.0 + z.ds * (z.ds - c.rho * z.dt) / z.one_minus_rho2);
      }
      if (std::exp(raw[layout.index(a, m, Field::sigma_t)]) > kSigmaFloor) {
        gradient[layout.index(a, m, Field::sigma_t)] +=
            scale * (-1.0 + z.dt * (z.dt - c.rho * z.ds) / z.one_minus_rho2);
      }
      if (std::abs(std::tanh(raw[layout.index(a, m, Field::rho)])) < kRhoLimit) {
        gradient[layout.index(a, m, Field::rho)] +=
            scale * (c.rho + z.ds * z.dt - c.rho * z.quad);
      }
    }
  }

  // Cross-entropy of area weights with the log floor; floored terms are flat.
  double active_mass = 0.0;
  for (std::size_t a = 0; a < n_areas; ++a) {
    const double w = params.areas[a].weight;
    const double prob = truth.area_probs[a];
    if (prob <= 0.0) continue;
    terms.cross_entropy -= prob * std::log(std::max(w, kLogFloor));
    if (w > kLogFloor) {
      active_mass += prob;
      gradient[layout.weight_index(a)] -= w2 * prob;
    }
  }
  for (std::size_t a = 0; a < n_areas; ++a) {
    gradient[layout.weight_index(a)] += w2 * params.areas[a].weight * active_mass;
  }

  terms.total = w1 * terms.likelihood + w2 * terms.cross_entropy;
  return terms;
}

BatchLoss loss_gradient(const Matrix& raw, std::span<const Truth> truths,
                        const MixtureLayout& layout, LossWeights weights) {
  if (raw.rows != truths.size()) throw StructuralError("loss_gradient: batch sizes differ");
  BatchLoss out;
  out.gradient = Matrix(raw.rows, raw.cols);
  for (std::size_t n = 0; n < raw.rows; ++n) {
    out.terms += loss_and_gradient(raw.row(n), truths[n], layout, weights, out.gradient.row(n));
  }
  return out;
}

std::vector<std::size_t> allocate_counts(std::span<const double> weights, std::size_t count) {
  std::vector<std::size_t> counts(weights.size(), 0);
  if (weights.empty() || count == 0) return counts;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InputError("allocate_counts: weights sum to zero");

  std::vector<double> remainders(weights.size());
  std::size_t assigned = 0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    const double quota = static_cast<double>(count) * weights[a] / total;
    counts[a] = static_cast<std::size_t>(std::floor(quota));
    remainders[a] = quota - static_cast<double>(counts[a]);
    assigned += counts[a];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return remainders[l] > remainders[r]; });
  for (std::size_t k = 0; assigned < count; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

MotionTarget sample_area(const AreaMixture& area, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = uniform(rng);
  std::size_t pick = area.components.size() - 1;
  double cumulative = 0.0;
  for (std::size_t m = 0; m < area.components.size(); ++m) {
    cumulative += area.components[m].alpha;
    if (u < cumulative) {
      pick = m;
      break;
    }
  }
  const auto& c = area.components[pick];
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  // Cholesky factor of [[ss^2, r ss st], [r ss st, st^2]].
  return {c.mu_s + c.sigma_s * z1,
          c.mu_t + c.sigma_t * (c.rho * z1 + std::sqrt(1.0 - c.rho * c.rho) * z2)};
}

std::vector<SamplePoint> sample(const MixtureParams& params, std::size_t count,
                                std::mt19937_64& rng) {
  std::vector<SamplePoint> points;
  if (count == 0) return points;
  const auto counts = allocate_counts(params.weights(), count);
  points.reserve(count);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    for (std::size_t k = 0; k < counts[a]; ++k) {
      const auto y = sample_area(params.areas[a], rng);
      points.push_back({a, y.s, y.t});
    }
  }
  return points;
}

namespace {
template <typename MeanFn, typename SigmaFn>
Moments marginal(const AreaMixture& area, MeanFn mean_of, SigmaFn sigma_of) {
  double mean = 0.0;
  double second = 0.0;
  for (const auto& c : area.components) {
    mean += c.alpha * mean_of(c);
    second += c.alpha * (sigma_of(c) * sigma_of(c) + mean_of(c) * mean_of(c));
  }
  return {mean, std::sqrt(std::max(second - mean * mean, 0.0))};
}
}  // namespace

Moments marginal_s(const AreaMixture& area) {
  return marginal(area, [](const Component& c) { return c.mu_s; },
                  [](const Component& c) { return c.sigma_s; });
}

Moments marginal_t(const AreaMixture& area) {
  return marginal(area, [](const Component& c) { return c.mu_t; },
                  [](const Component& c) { return c.sigma_t; });
}

}  // namespace simp::mdn
