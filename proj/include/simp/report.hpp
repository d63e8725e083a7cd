#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simp/dataset.hpp"
#include "simp/metrics.hpp"
#include "simp/trainer.hpp"

namespace simp::eval {

struct EvalOptions {
  double threshold = 0.3;
  MotionOptions motion{};
};

struct EvalReport {
  std::size_t samples = 0;
  std::size_t lane_change_samples = 0;
  std::size_t episodes = 0;
  double area_accuracy = 0.0;  // argmax over the five areas
  RocCurve intention;
  ClassificationReport classification;
  double per_dia_ttlc_filter = scene::kTtlcCap;  // average prediction time when defined
  std::vector<std::optional<double>> per_dia;
  MotionReport motion;  // lane-change samples only, true area's mixture
};

/// Scores a dataset from precomputed predictions (one per sample).
EvalReport evaluate(std::span<const mdn::MixtureParams> predictions, const data::Dataset& dataset,
                    const EvalOptions& options = {});
EvalReport evaluate(const train::Model& model, const data::Dataset& dataset,
                    const EvalOptions& options = {});

nlohmann::ordered_json report_json(const EvalReport& report);
std::string roc_csv(const RocCurve& curve);
std::string per_dia_csv(const EvalReport& report);
std::string motion_csv(const MotionReport& motion);
/// Precision / recall / F1 / average prediction time in a fixed-width table.
std::string summary_table(const EvalReport& report);

/// report.json plus roc.csv, per_dia_auc.csv and motion.csv under dir.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace simp::eval
