#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "simp/labels.hpp"
#include "simp/mixture.hpp"

namespace simp::eval {

using scene::Intention;

/// Area weights summed per coarse class: LCL = w1 + w2, LCR = w3 + w4, LK = w5.
struct CoarseScores {
  double lcl = 0.0;
  double lcr = 0.0;
  double lk = 0.0;
};

CoarseScores coarse_scores(std::span<const double> area_weights);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // scores >= threshold count as positive; +inf at the origin
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1), non-decreasing in both axes
  std::optional<double> auc;     // empty when only one class is present
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Threshold sweep over distinct scores, tied scores entering together.
/// AUC by the trapezoid rule.
RocCurve binary_roc(std::span<const double> scores, std::span<const char> positive);

/// Lane-change ROC. Every frame contributes one LCL-vs-rest and one
/// LCR-vs-rest instance; a true positive is a correct change direction, a
/// false positive is a change claimed in a direction the vehicle did not take.
RocCurve intention_roc(std::span<const CoarseScores> scores, std::span<const Intention> truths);

/// Class decision at threshold tau: the more likely change direction when its
/// score reaches tau, otherwise lane keep.
Intention decide(const CoarseScores& s, double threshold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_true_positives = false;
};

PrecisionRecall precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn);

struct FrameContext {
  std::int64_t episode_id = 0;
  double ttlc = 0.0;
};

struct ClassificationReport {
  double threshold = 0.3;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  PrecisionRecall metrics;
  std::optional<double> average_prediction_time;  // seconds
  std::size_t episodes_detected = 0;               // lane-change episodes that end as TP
  std::size_t episodes_total = 0;
};

/// TP: change predicted in the true direction. FP: change predicted in a
/// direction not taken (wrong side, or a lane keep). FN: a change predicted as
/// lane keep. Average prediction time needs context: per lane-change episode,
/// the TTLC of the earliest frame from which every later frame is TP.
ClassificationReport classification_report(std::span<const CoarseScores> scores,
                                            std::span<const Intention> truths, double threshold,
                                            std::span<const FrameContext> context = {});

/// One-vs-rest AUC per area over samples whose TTLC is at most ttlc_filter.
std::vector<std::optional<double>> per_dia_auc(std::span<const std::vector<double>> area_weights,
                                               std::span<const int> true_areas,
                                               std::span<const double> ttlc, double ttlc_filter);

struct IntervalStats {
  double coverage = 0.0;  // fraction of truths inside the interval
  double width = 0.0;     // mean interval width
};

struct MotionStats {
  std::size_t count = 0;
  double rmse_s = 0.0;
  double rmse_t = 0.0;
  std::array<IntervalStats, 2> interval_s{};  // k = 1, 2
  std::array<IntervalStats, 2> interval_t{};
};

struct MotionBin {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<MotionStats> stats;  // empty bins are kept and flagged
};

struct MotionReport {
  std::vector<MotionBin> bins;
  MotionStats overall;
  bool sampled_intervals = false;  // true when any area mixes several components
};

struct MotionOptions {
  double bin_width = 0.5;
  double ttlc_cap = 4.0;
  std::size_t quantile_draws = 10000;
  std::uint64_t seed = 1;
};

/// RMSE of the true area's mixture mean and marginal k-sigma interval
/// statistics, binned by true TTLC. Single-component areas use mu +- k sigma;
/// multi-component areas use central sampled quantiles of matching mass.
MotionReport motion_report(std::span<const mdn::MixtureParams> params,
                           std::span<const scene::Label> truths, const MotionOptions& options = {});

struct ExportRow {
  std::int64_t frame_id = 0;
  std::size_t area = 0;  // 1-based
  double s = 0.0;
  double t = 0.0;
};

struct AreaBand {
  std::int64_t frame_id = 0;
  std::size_t area = 0;  // 1-based
  double weight = 0.0;
  std::size_t allocated = 0;
  bool zero_allocation = false;  // weight too small to receive any point
  double mean_s = 0.0;
  double mean_t = 0.0;
  double sd_t = 0.0;
  double t_lo1 = 0.0, t_hi1 = 0.0;  // mean -+ 1 sd
  double t_lo3 = 0.0, t_hi3 = 0.0;  // mean -+ 3 sd
};

struct SampleExport {
  std::vector<ExportRow> rows;
  std::vector<AreaBand> bands;
};

SampleExport export_samples(std::span<const mdn::MixtureParams> params,
                            std::span<const std::int64_t> frame_ids, std::size_t count,
                            std::uint64_t seed);

std::string samples_csv(const SampleExport& e);
std::string bands_csv(const SampleExport& e);

}  // namespace simp::eval
