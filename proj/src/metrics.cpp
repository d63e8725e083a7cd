#include "simp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "simp/error.hpp"
#include "simp/trajectory.hpp"

namespace simp::eval {

CoarseScores coarse_scores(std::span<const double> w) {
  if (w.size() != static_cast<std::size_t>(scene::kAreaCount)) {
    throw InputError("coarse scores need exactly 5 area weights");
  }
  return {w[0] + w[1], w[2] + w[3], w[4]};
}

RocCurve binary_roc(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size()) throw InputError("scores and labels differ in length");
  RocCurve curve;
  for (char p : positive) (p ? curve.positives : curve.negatives)++;
  if (curve.positives == 0 || curve.negatives == 0) return curve;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double P = static_cast<double>(curve.positives);
  const double N = static_cast<double>(curve.negatives);
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (positive[order[i]] ? tp : fp)++;
      ++i;
    }
    const RocPoint next{static_cast<double>(fp) / N, static_cast<double>(tp) / P, threshold};
    const RocPoint& prev = curve.points.back();
    area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    curve.points.push_back(next);
  }
  // Exact endpoint regardless of rounding in the divisions above.
  curve.points.back().fpr = 1.0;
  curve.points.back().tpr = 1.0;
  curve.auc = area;
  return curve;
}

RocCurve intention_roc(std::span<const CoarseScores> scores, std::span<const Intention> truths) {
  if (scores.size() != truths.size()) throw InputError("scores and truths differ in length");
  std::vector<double> flat;
  std::vector<char> positive;
  flat.reserve(2 * scores.size());
  positive.reserve(2 * scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    flat.push_back(scores[i].lcl);
    positive.push_back(truths[i] == Intention::lcl);
    flat.push_back(scores[i].lcr);
    positive.push_back(truths[i] == Intention::lcr);
  }
  return binary_roc(flat, positive);
}

Intention decide(const CoarseScores& s, double threshold) {
  const double best = std::max(s.lcl, s.lcr);
  if (best < threshold) return Intention::lk;
  return s.lcl >= s.lcr ? Intention::lcl : Intention::lcr;
}

PrecisionRecall precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrecisionRecall out;
  if (tp == 0) {
    out.no_true_positives = true;
    return out;
  }
  const double t = static_cast<double>(tp);
  out.precision = t / (t + static_cast<double>(fp));
  out.recall = t / (t + static_cast<double>(fn));
  // Harmonic mean of precision and recall, written in counts to stay exact.
  out.f1 = 2.0 * t / (2.0 * t + static_cast<double>(fp) + static_cast<double>(fn));
  return out;
}

ClassificationReport classification_report(std::span<const CoarseScores> scores,
                                            std::span<const Intention> truths, double threshold,
                                            std::span<const FrameContext> context) {
  if (scores.size() != truths.size()) throw InputError("scores and truths differ in length");
  if (!context.empty() && context.size() != truths.size()) {
    throw InputError("frame context must match the scores in length");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("threshold must lie in [0, 1]");

  ClassificationReport r;
  r.threshold = threshold;
  std::vector<char> hit(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const Intention predicted = decide(scores[i], threshold);
    const bool truth_change = truths[i] != Intention::lk;
    if (predicted == Intention::lk) {
      (truth_change ? r.fn : r.tn)++;
    } else if (predicted == truths[i]) {
      ++r.tp;
      hit[i] = 1;
    } else {
      ++r.fp;
    }
  }
  r.metrics = precision_recall_f1(r.tp, r.fp, r.fn);
  if (context.empty()) return r;

  // Group lane-change frames by episode, ordered by decreasing TTLC (time order).
  std::map<std::int64_t, std::vector<std::size_t>> episodes;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] != Intention::lk) episodes[context[i].episode_id].push_back(i);
  }
  double total = 0.0;
  for (auto& [id, frames] : episodes) {
    std::stable_sort(frames.begin(), frames.end(), [&](std::size_t a, std::size_t b) {
      return context[a].ttlc > context[b].ttlc;
    });
    ++r.episodes_total;
    std::optional<std::size_t> earliest;
    for (std::size_t k = frames.size(); k-- > 0;) {
      if (!hit[frames[k]]) break;
      earliest = k;
    }
    if (earliest) {
      ++r.episodes_detected;
      total += context[frames[*earliest]].ttlc;
    }
  }
  if (r.episodes_detected > 0) {
    r.average_prediction_time = total / static_cast<double>(r.episodes_detected);
  }
  return r;
}

std::vector<std::optional<double>> per_dia_auc(std::span<const std::vector<double>> area_weights,
                                               std::span<const int> true_areas,
                                               std::span<const double> ttlc, double ttlc_filter) {
  if (area_weights.size() != true_areas.size() || ttlc.size() != true_areas.size()) {
    throw InputError("per-area AUC inputs differ in length");
  }
  std::vector<std::optional<double>> out(scene::kAreaCount);
  for (int a = 1; a <= scene::kAreaCount; ++a) {
    std::vector<double> scores;
    std::vector<char> positive;
    for (std::size_t i = 0; i < true_areas.size(); ++i) {
      if (ttlc[i] > ttlc_filter) continue;
      scores.push_back(area_weights[i].at(static_cast<std::size_t>(a - 1)));
      positive.push_back(true_areas[i] == a);
    }
    out[static_cast<std::size_t>(a - 1)] = binary_roc(scores, positive).auc;
  }
  return out;
}

namespace {

struct Accumulator {
  std::size_t count = 0;
  double sq_s = 0.0;
  double sq_t = 0.0;
  std::array<std::size_t, 2> in_s{};
  std::array<std::size_t, 2> in_t{};
  std::array<double, 2> width_s{};
  std::array<double, 2> width_t{};

  MotionStats finish() const {
    MotionStats m;
    m.count = count;
    const double n = static_cast<double>(count);
    m.rmse_s = std::sqrt(sq_s / n);
    m.rmse_t = std::sqrt(sq_t / n);
    for (std::size_t k = 0; k < 2; ++k) {
      m.interval_s[k] = {static_cast<double>(in_s[k]) / n, width_s[k] / n};
      m.interval_t[k] = {static_cast<double>(in_t[k]) / n, width_t[k] / n};
    }
    return m;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

}  // namespace

MotionReport motion_report(std::span<const mdn::MixtureParams> params,
                           std::span<const scene::Label> truths, const MotionOptions& options) {
  if (params.size() != truths.size()) throw InputError("params and truths differ in length");
  if (!(options.bin_width > 0.0)) throw InputError("bin width must be positive");
  const auto n_bins = static_cast<std::size_t>(std::ceil(options.ttlc_cap / options.bin_width - 1e-9));
  std::vector<Accumulator> bins(n_bins);
  Accumulator overall;
  MotionReport report;
  std::mt19937_64 rng(options.seed);
  const std::array<double, 2> mass = {std::erf(1.0 / std::sqrt(2.0)), std::erf(2.0 / std::sqrt(2.0))};

  std::vector<double> draws_s, draws_t;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& label = truths[i];
    if (label.area < 1 || static_cast<std::size_t>(label.area) > params[i].areas.size()) {
      throw InputError("truth area outside the predicted areas");
    }
    const auto& area = params[i].areas[static_cast<std::size_t>(label.area - 1)];
    const auto ms = mdn::marginal_s(area);
    const auto mt = mdn::marginal_t(area);
    std::array<Interval, 2> is{}, it{};
    if (area.components.size() == 1) {
      for (std::size_t k = 0; k < 2; ++k) {
        const double kk = static_cast<double>(k + 1);
        is[k] = {ms.mean - kk * ms.stddev, ms.mean + kk * ms.stddev};
        it[k] = {mt.mean - kk * mt.stddev, mt.mean + kk * mt.stddev};
      }
    } else {
      report.sampled_intervals = true;
      draws_s.resize(options.quantile_draws);
      draws_t.resize(options.quantile_draws);
      for (std::size_t d = 0; d < options.quantile_draws; ++d) {
        const auto y = mdn::sample_area(area, rng);
        draws_s[d] = y.s;
        draws_t[d] = y.t;
      }
      std::sort(draws_s.begin(), draws_s.end());
      std::sort(draws_t.begin(), draws_t.end());
      for (std::size_t k = 0; k < 2; ++k) {
        const double lo = (1.0 - mass[k]) / 2.0, hi = (1.0 + mass[k]) / 2.0;
        is[k] = {quantile_sorted(draws_s, lo), quantile_sorted(draws_s, hi)};
        it[k] = {quantile_sorted(draws_t, lo), quantile_sorted(draws_t, hi)};
      }
    }

    auto add = [&](Accumulator& acc) {
      ++acc.count;
      acc.sq_s += (ms.mean - label.y_s) * (ms.mean - label.y_s);
      acc.sq_t += (mt.mean - label.y_t) * (mt.mean - label.y_t);
      for (std::size_t k = 0; k < 2; ++k) {
        acc.in_s[k] += label.y_s >= is[k].lo && label.y_s <= is[k].hi;
        acc.in_t[k] += label.y_t >= it[k].lo && label.y_t <= it[k].hi;
        acc.width_s[k] += is[k].hi - is[k].lo;
        acc.width_t[k] += it[k].hi - it[k].lo;
      }
    };
    add(overall);
    if (label.y_t >= 0.0 && label.y_t <= options.ttlc_cap && n_bins > 0) {
      // The cap itself falls into the last bin.
      auto b = static_cast<std::size_t>(std::floor(label.y_t / options.bin_width));
      add(bins[std::min(b, n_bins - 1)]);
    }
  }

  for (std::size_t b = 0; b < n_bins; ++b) {
    MotionBin bin;
    bin.lo = static_cast<double>(b) * options.bin_width;
    bin.hi = std::min(options.ttlc_cap, bin.lo + options.bin_width);
    if (bins[b].count > 0) bin.stats = bins[b].finish();
    report.bins.push_back(bin);
  }
  if (overall.count > 0) report.overall = overall.finish();
  return report;
}

SampleExport export_samples(std::span<const mdn::MixtureParams> params,
                            std::span<const std::int64_t> frame_ids, std::size_t count,
                            std::uint64_t seed) {
  if (params.size() != frame_ids.size()) throw InputError("params and frame ids differ in length");
  SampleExport out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto weights = params[i].weights();
    const auto counts = mdn::allocate_counts(weights, count);
    for (const auto& p : mdn::sample(params[i], count, rng)) {
      out.rows.push_back({frame_ids[i], p.area + 1, p.s, p.t});
    }
    for (std::size_t a = 0; a < params[i].areas.size(); ++a) {
      const auto ms = mdn::marginal_s(params[i].areas[a]);
      const auto mt = mdn::marginal_t(params[i].areas[a]);
      AreaBand band;
      band.frame_id = frame_ids[i];
      band.area = a + 1;
      band.weight = weights[a];
      band.allocated = counts[a];
      band.zero_allocation = counts[a] == 0;
      band.mean_s = ms.mean;
      band.mean_t = mt.mean;
      band.sd_t = mt.stddev;
      band.t_lo1 = mt.mean - mt.stddev;
      band.t_hi1 = mt.mean + mt.stddev;
      band.t_lo3 = mt.mean - 3.0 * mt.stddev;
      band.t_hi3 = mt.mean + 3.0 * mt.stddev;
      out.bands.push_back(band);
    }
  }
  return out;
}

std::string samples_csv(const SampleExport& e) {
  std::string out = "frame_id,area,y_s,y_t\n";
  for (const auto& r : e.rows) {
    out += std::to_string(r.frame_id) + ',' + std::to_string(r.area) + ',' +
           data::format_double(r.s) + ',' + data::format_double(r.t) + '\n';
  }
  return out;
}

std::string bands_csv(const SampleExport& e) {
  std::string out =
      "frame_id,area,weight,allocated,zero_allocation,mean_s,mean_t,sd_t,t_lo1,t_hi1,t_lo3,t_hi3\n";
  for (const auto& b : e.bands) {
    out += std::to_string(b.frame_id) + ',' + std::to_string(b.area) + ',' +
           data::format_double(b.weight) + ',' + std::to_string(b.allocated) + ',' +
           (b.zero_allocation ? "1" : "0") + ',' + data::format_double(b.mean_s) + ',' +
           data::format_double(b.mean_t) + ',' + data::format_double(b.sd_t) + ',' +
           data::format_double(b.t_lo1) + ',' + data::format_double(b.t_hi1) + ',' +
           data::format_double(b.t_lo3) + ',' + data::format_double(b.t_hi3) + '\n';
  }
  return out;
}

}  // namespace simp::eval
