#pragma once

// Per-area bivariate Gaussian mixtures read from a raw network output.
//
// Raw layout: N_a consecutive area blocks of (1 + 6M) values,
//   [z_weight, (z_alpha, z_mu_s, z_mu_t, z_sigma_s, z_sigma_t, z_rho) x M].
// Constrained form: area weights = softmax over the N_a z_weight values,
// alpha = per-area softmax, mu = z, sigma = max(exp(z), sigma floor),
// rho = tanh(z) limited to |rho| <= kRhoLimit.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "simp/matrix.hpp"

namespace simp::mdn {

inline constexpr double kSigmaFloor = 1e-3;
inline constexpr double kLogFloor = 1e-12;
inline constexpr double kRhoLimit = 1.0 - 1e-9;

enum class Field : std::size_t { alpha = 0, mu_s, mu_t, sigma_s, sigma_t, rho };

struct MixtureLayout {
  std::size_t areas = 5;
  std::size_t components = 1;

  std::size_t block_size() const { return 1 + 6 * components; }
  std::size_t raw_size() const { return areas * block_size(); }
  std::size_t weight_index(std::size_t area) const { return area * block_size(); }
  std::size_t index(std::size_t area, std::size_t component, Field field) const {
    return area * block_size() + 1 + 6 * component + static_cast<std::size_t>(field);
  }
};

struct Component {
  double alpha = 1.0;
  double mu_s = 0.0;
  double mu_t = 0.0;
  double sigma_s = 1.0;
  double sigma_t = 1.0;
  double rho = 0.0;
};

struct AreaMixture {
  double weight = 0.0;
  std::vector<Component> components;
};

struct MixtureParams {
  std::vector<AreaMixture> areas;

  std::vector<double> weights() const;
  /// Checks every constraint (weights and alphas on the simplex, positive
  /// sigmas, |rho| < 1). Returns false instead of throwing.
  bool valid(double tolerance = 1e-9) const;
};

/// Motion target: insertion distance (feet) and time to lane change (s).
struct MotionTarget {
  double s = 0.0;
  double t = 0.0;
};

/// Ground truth for one sample: area probabilities (one-hot in practice) and
/// the observed motion.
struct Truth {
  std::vector<double> area_probs;
  MotionTarget target;

  static Truth one_hot(std::size_t areas, std::size_t area, MotionTarget target);
};

struct LossWeights {
  double likelihood = 1.0;     // W1
  double cross_entropy = 1.0;  // W2
};

/// Unweighted sums of both loss components plus the weighted total.
struct LossTerms {
  double likelihood = 0.0;
  double cross_entropy = 0.0;
  double total = 0.0;

  LossTerms& operator+=(const LossTerms& other);
};

MixtureParams constrain(std::span<const double> raw, const MixtureLayout& layout);

double component_log_density(const Component& c, MotionTarget y);
double log_density(const MixtureParams& params, std::size_t area, MotionTarget y);

/// Joint loss summed over the batch:
///   W1 * (-sum_n log sum_a w^_a f(y|area a)) + W2 * (-sum_n sum_a w^_a log w_a).
LossTerms simp_loss(std::span<const MixtureParams> params, std::span<const Truth> truths,
                    LossWeights weights);

/// Loss of one raw output and its gradient with respect to that output.
LossTerms loss_and_gradient(std::span<const double> raw, const Truth& truth,
                            const MixtureLayout& layout, LossWeights weights,
                            std::span<double> gradient);

struct BatchLoss {
  LossTerms terms;
  Matrix gradient;  // same shape as the raw batch
};

/// Batched version; each row of raw is one sample.
BatchLoss loss_gradient(const Matrix& raw, std::span<const Truth> truths,
                        const MixtureLayout& layout, LossWeights weights);

struct SamplePoint {
  std::size_t area = 0;
  double s = 0.0;
  double t = 0.0;
};

/// Largest-remainder split of count over weights; ties go to lower indices.
std::vector<std::size_t> allocate_counts(std::span<const double> weights, std::size_t count);

/// Draws one point from an area's mixture (component by alpha, then Cholesky).
MotionTarget sample_area(const AreaMixture& area, std::mt19937_64& rng);

/// Two-step draw: counts per area proportional to weight, then each point
/// from its area's mixture. Points are grouped by area in index order.
std::vector<SamplePoint> sample(const MixtureParams& params, std::size_t count,
                                std::mt19937_64& rng);

/// Mean and standard deviation of a single marginal of an area's mixture.
struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};
Moments marginal_s(const AreaMixture& area);
Moments marginal_t(const AreaMixture& area);

}  // namespace simp::mdn
