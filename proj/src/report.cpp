#include "simp/report.hpp"

#include <algorithm>
#include <cstdio>

#include "simp/error.hpp"
#include "simp/trajectory.hpp"

namespace simp::eval {
namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json stats_json(const MotionStats& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["rmse_s"] = m.rmse_s;
  j["rmse_t"] = m.rmse_t;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::string tag = std::to_string(k + 1) + "sigma";
    j["coverage_s_" + tag] = m.interval_s[k].coverage;
    j["width_s_" + tag] = m.interval_s[k].width;
    j["coverage_t_" + tag] = m.interval_t[k].coverage;
    j["width_t_" + tag] = m.interval_t[k].width;
  }
  return j;
}

std::string fmt_optional(const std::optional<double>& v, const char* pattern) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, *v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const mdn::MixtureParams> predictions, const data::Dataset& dataset,
                    const EvalOptions& options) {
  const auto& samples = dataset.samples;
  if (predictions.size() != samples.size()) {
    throw InputError("evaluation needs one prediction per sample");
  }
  EvalReport r;
  r.samples = samples.size();
  r.episodes = dataset.episode_ids().size();

  std::vector<CoarseScores> coarse;
  std::vector<Intention> truths;
  std::vector<FrameContext> context;
  std::vector<std::vector<double>> weights;
  std::vector<int> areas;
  std::vector<double> ttlc;
  std::vector<mdn::MixtureParams> change_params;
  std::vector<scene::Label> change_labels;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto w = predictions[i].weights();
    const auto best = static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin()) + 1;
    if (best == s.label.area) ++correct;
    coarse.push_back(coarse_scores(w));
    truths.push_back(scene::merge_intentions(s.label.area));
    context.push_back({s.episode_id, s.label.y_t});
    weights.push_back(std::move(w));
    areas.push_back(s.label.area);
    ttlc.push_back(s.label.y_t);
    if (s.label.area != 5) {
      change_params.push_back(predictions[i]);
      change_labels.push_back(s.label);
    }
  }
  r.lane_change_samples = change_labels.size();
  r.area_accuracy = samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(samples.size());
  r.intention = intention_roc(coarse, truths);
  r.classification = classification_report(coarse, truths, options.threshold, context);
  r.per_dia_ttlc_filter = r.classification.average_prediction_time.value_or(scene::kTtlcCap);
  r.per_dia = per_dia_auc(weights, areas, ttlc, r.per_dia_ttlc_filter);
  r.motion = motion_report(change_params, change_labels, options.motion);
  return r;
}

EvalReport evaluate(const train::Model& model, const data::Dataset& dataset,
                    const EvalOptions& options) {
  const auto predictions = model.predict_batch(dataset.samples);
  return evaluate(predictions, dataset, options);
}

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "simp-eval-report";
  j["format_version"] = 1;
  j["composition"] = {{"samples", r.samples},
                      {"lane_change_samples", r.lane_change_samples},
                      {"episodes", r.episodes}};
  j["area_accuracy"] = r.area_accuracy;

  nlohmann::ordered_json roc;
  roc["auc"] = optional_number(r.intention.auc);
  roc["positives"] = r.intention.positives;
  roc["negatives"] = r.intention.negatives;
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : r.intention.points) {
    // +inf has no JSON spelling; the origin's threshold is written as null.
    points.push_back({p.fpr, p.tpr, std::isfinite(p.threshold) ? nlohmann::ordered_json(p.threshold)
                                                               : nlohmann::ordered_json(nullptr)});
  }
  roc["points_fpr_tpr_threshold"] = std::move(points);
  j["intention_roc"] = std::move(roc);

  const auto& c = r.classification;
  j["classification"] = {{"threshold", c.threshold},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"fn", c.fn},
                         {"tn", c.tn},
                         {"precision", c.metrics.precision},
                         {"recall", c.metrics.recall},
                         {"f1", c.metrics.f1},
                         {"no_true_positives", c.metrics.no_true_positives},
                         {"average_prediction_time", optional_number(c.average_prediction_time)},
                         {"episodes_detected", c.episodes_detected},
                         {"episodes_total", c.episodes_total}};

  nlohmann::ordered_json dia = nlohmann::ordered_json::array();
  for (const auto& a : r.per_dia) dia.push_back(optional_number(a));
  j["per_dia_auc"] = {{"ttlc_filter", r.per_dia_ttlc_filter}, {"auc", std::move(dia)}};

  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& b : r.motion.bins) {
    nlohmann::ordered_json e = {{"ttlc_lo", b.lo}, {"ttlc_hi", b.hi}, {"empty", !b.stats.has_value()}};
    if (b.stats) e["stats"] = stats_json(*b.stats);
    bins.push_back(std::move(e));
  }
  j["motion"] = {{"interval_method", r.motion.sampled_intervals ? "sampled_quantiles" : "gaussian_marginal"},
                 {"overall", stats_json(r.motion.overall)},
                 {"bins", std::move(bins)}};
  return j;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out += data::format_double(p.fpr) + ',' + data::format_double(p.tpr) + ',' +
           (std::isfinite(p.threshold) ? data::format_double(p.threshold) : std::string("inf")) + '\n';
  }
  return out;
}

std::string per_dia_csv(const EvalReport& r) {
  std::string out = "area,auc,ttlc_filter\n";
  for (std::size_t a = 0; a < r.per_dia.size(); ++a) {
    out += std::to_string(a + 1) + ',' +
           (r.per_dia[a] ? data::format_double(*r.per_dia[a]) : std::string("undefined")) + ',' +
           data::format_double(r.per_dia_ttlc_filter) + '\n';
  }
  return out;
}

std::string motion_csv(const MotionReport& m) {
  std::string out =
      "ttlc_lo,ttlc_hi,count,rmse_s,rmse_t,coverage_s_1sigma,coverage_s_2sigma,width_s_1sigma,"
      "width_s_2sigma,coverage_t_1sigma,coverage_t_2sigma,width_t_1sigma,width_t_2sigma\n";
  for (const auto& b : m.bins) {
    out += data::format_double(b.lo) + ',' + data::format_double(b.hi) + ',';
    if (!b.stats) {
      out += "0,,,,,,,,,,\n";
      continue;
    }
    const auto& s = *b.stats;
    out += std::to_string(s.count) + ',' + data::format_double(s.rmse_s) + ',' +
           data::format_double(s.rmse_t) + ',' + data::format_double(s.interval_s[0].coverage) + ',' +
           data::format_double(s.interval_s[1].coverage) + ',' +
           data::format_double(s.interval_s[0].width) + ',' +
           data::format_double(s.interval_s[1].width) + ',' +
           data::format_double(s.interval_t[0].coverage) + ',' +
           data::format_double(s.interval_t[1].coverage) + ',' +
           data::format_double(s.interval_t[0].width) + ',' +
           data::format_double(s.interval_t[1].width) + '\n';
  }
  return out;
}

std::string summary_table(const EvalReport& r) {
  const auto& c = r.classification;
  char line[256];
  std::string out;
  out += "+--------+-----------+--------+--------+----------------------+\n";
  out += "| Method | Precision | Recall | F1     | Avg. pred. time (s)  |\n";
  out += "+--------+-----------+--------+--------+----------------------+\n";
  std::snprintf(line, sizeof line, "| SIMP   | %9.3f | %6.3f | %6.3f | %20s |\n", c.metrics.precision,
                c.metrics.recall, c.metrics.f1,
                fmt_optional(c.average_prediction_time, "%.3f").c_str());
  out += line;
  out += "+--------+-----------+--------+--------+----------------------+\n";
  std::snprintf(line, sizeof line, "threshold %.2f  TP %zu  FP %zu  FN %zu  TN %zu  intention AUC %s\n",
                c.threshold, c.tp, c.fp, c.fn, c.tn, fmt_optional(r.intention.auc, "%.4f").c_str());
  out += line;
  out += "per-area AUC (TTLC <= " + fmt_optional(r.per_dia_ttlc_filter, "%.3f") + " s):";
  for (std::size_t a = 0; a < r.per_dia.size(); ++a) {
    out += "  area" + std::to_string(a + 1) + " " + fmt_optional(r.per_dia[a], "%.4f");
  }
  out += '\n';
  if (r.motion.overall.count > 0) {
    std::snprintf(line, sizeof line,
                  "motion (lane changes, %zu samples): RMSE y_s %.3f ft, RMSE y_t %.3f s, "
                  "1-sigma coverage s/t %.3f/%.3f\n",
                  r.motion.overall.count, r.motion.overall.rmse_s, r.motion.overall.rmse_t,
                  r.motion.overall.interval_s[0].coverage, r.motion.overall.interval_t[0].coverage);
    out += line;
  }
  return out;
}

void write_report(const EvalReport& r, const std::filesystem::path& dir) {
  data::write_text_file(dir / "report.json", report_json(r).dump(2) + "\n");
  data::write_text_file(dir / "roc.csv", roc_csv(r.intention));
  data::write_text_file(dir / "per_dia_auc.csv", per_dia_csv(r));
  data::write_text_file(dir / "motion.csv", motion_csv(r.motion));
  data::write_text_file(dir / "summary.txt", summary_table(r));
}

}  // namespace simp::eval
