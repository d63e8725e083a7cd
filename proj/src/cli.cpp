#include "simp/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "simp/dataset.hpp"
#include "simp/episodes.hpp"
#include "simp/error.hpp"
#include "simp/log.hpp"
#include "simp/metrics.hpp"
#include "simp/report.hpp"
#include "simp/synth.hpp"
#include "simp/trainer.hpp"
#include "simp/trajectory.hpp"

namespace simp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Extraction settings as they appear in config files.
struct ExtractSettings {
  data::ExtractionConfig extraction;
  double train_fraction = 0.8;
  std::uint64_t seed = 7;
};

json to_json(const ExtractSettings& s) {
  const auto& e = s.extraction;
  return {{"lane_width", e.geometry.lane_width},
          {"lane_count", e.geometry.lane_count},
          {"existence_radius", e.scene.existence_radius},
          {"imputed_distance", e.scene.imputed_distance},
          {"phantom_spacing", e.scene.phantom_spacing},
          {"min_gap", e.scene.min_gap},
          {"ittc_limit", e.scene.ittc_limit},
          {"frame_rate", e.frame_rate},
          {"window_frames", e.window_frames},
          {"lane_keep_min_frames", e.lane_keep_min_frames},
          {"lane_keep_ratio_cap", e.lane_keep_ratio_cap},
          {"confirm_frames", e.confirm_frames},
          {"train_fraction", s.train_fraction},
          {"seed", s.seed}};
}

ExtractSettings extract_settings_from(const json& j) {
  ExtractSettings s;
  auto& e = s.extraction;
  e.geometry.lane_width = j.value("lane_width", e.geometry.lane_width);
  e.geometry.lane_count = j.value("lane_count", e.geometry.lane_count);
  e.scene.existence_radius = j.value("existence_radius", e.scene.existence_radius);
  e.scene.imputed_distance = j.value("imputed_distance", e.scene.imputed_distance);
  e.scene.phantom_spacing = j.value("phantom_spacing", e.scene.phantom_spacing);
  e.scene.min_gap = j.value("min_gap", e.scene.min_gap);
  e.scene.ittc_limit = j.value("ittc_limit", e.scene.ittc_limit);
  e.frame_rate = j.value("frame_rate", e.frame_rate);
  e.window_frames = j.value("window_frames", e.window_frames);
  e.lane_keep_min_frames = j.value("lane_keep_min_frames", e.lane_keep_min_frames);
  e.lane_keep_ratio_cap = j.value("lane_keep_ratio_cap", e.lane_keep_ratio_cap);
  e.confirm_frames = j.value("confirm_frames", e.confirm_frames);
  s.train_fraction = j.value("train_fraction", s.train_fraction);
  s.seed = j.value("seed", s.seed);
  return s;
}

/// Section of a config file for one subcommand. A file may hold one section
/// per subcommand or just the flat settings of the one being run.
json config_section(const std::string& path, const std::string& section) {
  if (path.empty()) return json::object();
  json doc;
  try {
    doc = json::parse(data::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError("cannot parse config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw DataError("config " + path + " is not a JSON object");
  if (doc.contains(section)) return doc[section];
  return doc;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::string config_path;
  json effective_config = json::object();
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;

  void write(const fs::path& dir) const {
    nlohmann::ordered_json j;
    j["tool"] = "simp";
    j["tool_version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["argv"] = args;
    j["config_path"] = config_path.empty() ? nlohmann::ordered_json(nullptr)
                                           : nlohmann::ordered_json(config_path);
    j["effective_config"] = effective_config;
    j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["timestamp"] = timestamp_utc();
    data::write_text_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

bool dataset_exists(const fs::path& stem) { return fs::exists(data::features_path(stem)); }

/// Accepts a dataset stem, a directory holding dataset.*, or a directory
/// whose preferred subdirectory (train/ or test/) holds one.
fs::path resolve_dataset(const fs::path& path, const std::string& preferred) {
  if (dataset_exists(path)) return path;
  if (fs::is_directory(path)) {
    if (!preferred.empty() && dataset_exists(path / preferred / "dataset")) {
      return path / preferred / "dataset";
    }
    if (dataset_exists(path / "dataset")) return path / "dataset";
  }
  throw DataError("no dataset found at " + path.string() +
                  " (expected <stem>.features.csv or a directory with dataset.features.csv)");
}

fs::path resolve_model(const fs::path& path) {
  if (fs::is_directory(path)) return path / "model.json";
  return path;
}

/// Trajectory CSV given directly or inside a synth / ingest output directory.
fs::path resolve_trajectories(const fs::path& path) {
  if (fs::is_regular_file(path)) return path;
  for (const char* name : {"corpus.csv", "records.csv"}) {
    if (fs::is_regular_file(path / name)) return path / name;
  }
  throw DataError("no trajectory CSV found at " + path.string());
}

struct Common {
  std::string config_path;
  std::string out;
  std::string data_path;
  std::string model_path;
  std::uint64_t seed = 0;
};

int cmd_synth(const Common& c, CLI::Option* seed_opt, std::optional<std::size_t> episodes,
              const Manifest& base) {
  auto cfg = config_section(c.config_path, "synth").get<data::SynthConfig>();
  if (seed_opt->count()) cfg.seed = c.seed;
  if (episodes) cfg.episodes = *episodes;
  const fs::path out(c.out);
  spdlog::info("generating {} scenarios (seed {})", cfg.episodes, cfg.seed);
  const auto corpus = data::generate_synthetic(cfg);
  data::write_trajectory_csv(out / "corpus.csv", corpus.records);
  data::write_text_file(out / "corpus.truth.json", data::truth_json(corpus.truth).dump(2) + "\n");
  std::size_t changes = 0;
  for (const auto& t : corpus.truth) changes += t.lane_change;
  spdlog::info("wrote {} records, {} scripted lane changes", corpus.records.size(), changes);

  Manifest m = base;
  m.effective_config = cfg;
  m.seed = cfg.seed;
  m.outputs = {"corpus.csv", "corpus.truth.json"};
  m.write(out);
  return 0;
}

int cmd_ingest(const Common& c, const std::string& column_map, const Manifest& base) {
  data::ColumnMap columns;
  if (!column_map.empty()) {
    try {
      columns = data::ColumnMap::from_json(json::parse(data::read_text_file(column_map)));
    } catch (const json::parse_error& e) {
      throw DataError("cannot parse column map: " + std::string(e.what()));
    }
  }
  if (c.data_path.empty()) throw UsageError("ingest needs --data <csv>");
  const fs::path out(c.out);
  const auto report = data::ingest_csv(c.data_path, columns);
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  spdlog::info("ingested {} records from {} rows ({} malformed, {} duplicates)",
               report.records.size(), report.rows_read, report.malformed_rows,
               report.duplicate_rows);
  data::write_trajectory_csv(out / "records.csv", report.records);
  nlohmann::ordered_json summary = {{"rows_read", report.rows_read},
                                    {"records", report.records.size()},
                                    {"malformed_rows", report.malformed_rows},
                                    {"duplicate_rows", report.duplicate_rows},
                                    {"warnings", report.warnings}};
  data::write_text_file(out / "ingest_report.json", summary.dump(2) + "\n");

  Manifest m = base;
  m.inputs = {{"data", c.data_path}};
  if (!column_map.empty()) m.inputs["column_map"] = column_map;
  m.effective_config = {{"vehicle_id", columns.vehicle_id}, {"frame_id", columns.frame_id},
                        {"x", columns.x},           {"y", columns.y},
                        {"velocity", columns.velocity}, {"lane", columns.lane}};
  m.outputs = {"records.csv", "ingest_report.json"};
  m.write(out);
  return 0;
}

json truth_check(const std::vector<data::ScriptedEpisode>& truth,
                 const data::ExtractionReport& report) {
  std::map<std::int64_t, std::vector<const data::EpisodeInfo*>> by_vehicle;
  for (const auto& e : report.episodes) {
    if (e.lane_change) by_vehicle[e.vehicle_id].push_back(&e);
  }
  std::size_t scripted = 0, agreed = 0;
  json mismatches = json::array();
  for (const auto& t : truth) {
    if (!t.lane_change) continue;
    ++scripted;
    bool ok = false;
    for (const auto* e : by_vehicle[t.vehicle_id]) {
      if (e->label.area == t.area && std::llabs(e->crossing_frame - t.crossing_frame) <= 1) ok = true;
    }
    if (ok) {
      ++agreed;
    } else {
      mismatches.push_back({{"vehicle_id", t.vehicle_id}, {"scripted_area", t.area},
                            {"scripted_crossing_frame", t.crossing_frame}});
      spdlog::warn("scripted lane change of vehicle {} not recovered", t.vehicle_id);
    }
  }
  return {{"scripted_lane_changes", scripted},
          {"recovered", agreed},
          {"agreement", scripted ? static_cast<double>(agreed) / static_cast<double>(scripted) : 1.0},
          {"mismatches", mismatches}};
}

int cmd_extract(const Common& c, CLI::Option* seed_opt, std::optional<double> train_fraction,
                const Manifest& base) {
  auto settings = extract_settings_from(config_section(c.config_path, "extract"));
  if (seed_opt->count()) settings.seed = c.seed;
  if (train_fraction) settings.train_fraction = *train_fraction;
  if (c.data_path.empty()) throw UsageError("extract needs --data <trajectory csv or directory>");
  const fs::path source = resolve_trajectories(c.data_path);
  const fs::path out(c.out);

  const auto ingest = data::ingest_csv(source);
  if (ingest.malformed_rows > 0) spdlog::warn("{} malformed trajectory rows skipped", ingest.malformed_rows);
  const auto report = data::extract_episodes(ingest.records, settings.extraction);
  const auto& ds = report.dataset;
  spdlog::info("{} episodes, {} samples ({} lane change, {} lane keep); {} lane-keep windows capped",
               report.episodes.size(), ds.samples.size(), ds.lane_change_samples(),
               ds.lane_keep_samples(), report.dropped_lane_keep);
  data::save_dataset(ds, out / "dataset");
  const auto [train, test] = data::split_dataset(ds, settings.train_fraction, settings.seed);
  data::save_dataset(train, out / "train" / "dataset");
  data::save_dataset(test, out / "test" / "dataset");
  spdlog::info("split: {} train samples, {} test samples", train.samples.size(), test.samples.size());

  nlohmann::ordered_json summary;
  summary["episodes"] = report.episodes.size();
  summary["skipped_vehicles"] = report.skipped_vehicles;
  summary["rejected_crossings"] = report.rejected_crossings;
  summary["dropped_lane_keep_windows"] = report.dropped_lane_keep;
  summary["train_episodes"] = train.episode_ids().size();
  summary["test_episodes"] = test.episode_ids().size();
  std::vector<std::string> outputs = {"dataset.features.csv", "dataset.meta.json",
                                      "train/dataset.features.csv", "train/dataset.meta.json",
                                      "test/dataset.features.csv", "test/dataset.meta.json",
                                      "extraction.json"};
  fs::path truth_path = source;
  truth_path.replace_extension(".truth.json");
  if (fs::exists(truth_path)) {
    const auto truth = data::truth_from_json(json::parse(data::read_text_file(truth_path)));
    const auto check = truth_check(truth, report);
    spdlog::info("scripted truth agreement: {:.4f}", check["agreement"].get<double>());
    data::write_text_file(out / "truth_check.json", check.dump(2) + "\n");
    outputs.push_back("truth_check.json");
  }
  data::write_text_file(out / "extraction.json", summary.dump(2) + "\n");

  Manifest m = base;
  m.inputs = {{"data", source.string()}};
  m.effective_config = to_json(settings);
  m.seed = settings.seed;
  m.outputs = outputs;
  m.write(out);
  return 0;
}

int cmd_train(const Common& c, CLI::Option* seed_opt, std::optional<double> w1,
              std::optional<double> w2, std::optional<std::size_t> epochs, const Manifest& base) {
  auto cfg = config_section(c.config_path, "train").get<train::TrainConfig>();
  if (seed_opt->count()) cfg.seed = c.seed;
  if (w1) cfg.loss.likelihood = *w1;
  if (w2) cfg.loss.cross_entropy = *w2;
  if (epochs) cfg.epochs = *epochs;
  cfg.validate();
  if (c.data_path.empty()) throw UsageError("train needs --data <dataset>");
  const fs::path stem = resolve_dataset(c.data_path, "train");
  const fs::path out(c.out);
  const auto full = data::load_dataset(stem);

  data::Dataset fit_set = full;
  data::Dataset validation;
  const bool use_validation = cfg.validation_fraction > 0.0 && full.episode_ids().size() >= 2;
  if (use_validation) {
    auto [t, v] = data::split_dataset(full, 1.0 - cfg.validation_fraction, cfg.seed + 1);
    fit_set = std::move(t);
    validation = std::move(v);
  }
  spdlog::info("training on {} samples, validating on {} (W1 {}, W2 {})", fit_set.samples.size(),
               validation.samples.size(), cfg.loss.likelihood, cfg.loss.cross_entropy);

  Manifest m = base;
  m.inputs = {{"data", stem.string()}};
  m.effective_config = cfg;
  m.seed = cfg.seed;

  train::TrainResult result;
  try {
    result = train::train(fit_set, use_validation ? &validation : nullptr, cfg);
  } catch (const train::TrainingAborted& e) {
    train::save_model(e.last_good(), out / "model.last_good.json");
    spdlog::error("training aborted in epoch {}, batch {}: {}", e.epoch(), e.batch(), e.what());
    m.outputs = {"model.last_good.json"};
    m.write(out);
    throw;
  }
  train::save_model(result.model, out / "model.json");

  nlohmann::ordered_json log;
  log["best_epoch"] = result.best_epoch;
  log["stopped_early"] = result.stopped_early;
  log["train_samples"] = fit_set.samples.size();
  log["validation_samples"] = validation.samples.size();
  auto epochs_json = json::array();
  std::string csv = "epoch,train_w1_term,train_w2_term,train_total,validation_w1_term,"
                    "validation_w2_term,validation_total,validation_area_accuracy\n";
  for (const auto& e : result.log) {
    epochs_json.push_back(train::to_json(e));
    csv += std::to_string(e.epoch) + ',' + data::format_double(e.train.likelihood) + ',' +
           data::format_double(e.train.cross_entropy) + ',' + data::format_double(e.train.total) + ',';
    if (e.validation) {
      csv += data::format_double(e.validation->likelihood) + ',' +
             data::format_double(e.validation->cross_entropy) + ',' +
             data::format_double(e.validation->total) + ',' +
             data::format_double(e.validation_accuracy.value_or(0.0));
    } else {
      csv += ",,,";
    }
    csv += '\n';
  }
  log["epochs"] = std::move(epochs_json);
  data::write_text_file(out / "training_log.json", log.dump(2) + "\n");
  data::write_text_file(out / "training_log.csv", csv);
  m.outputs = {"model.json", "training_log.json", "training_log.csv"};
  m.write(out);
  return 0;
}

int cmd_eval(const Common& c, std::optional<double> threshold, const Manifest& base) {
  const json section = config_section(c.config_path, "eval");
  eval::EvalOptions options;
  options.threshold = section.value("threshold", options.threshold);
  options.motion.bin_width = section.value("ttlc_bin_width", options.motion.bin_width);
  options.motion.seed = section.value("seed", options.motion.seed);
  if (threshold) options.threshold = *threshold;
  if (c.model_path.empty() || c.data_path.empty()) throw UsageError("eval needs --model and --data");
  const fs::path model_path = resolve_model(c.model_path);
  const fs::path stem = resolve_dataset(c.data_path, "test");
  const fs::path out(c.out);

  const auto model = train::load_model(model_path);
  const auto dataset = data::load_dataset(stem);
  const auto report = eval::evaluate(model, dataset, options);
  eval::write_report(report, out);
  std::cout << eval::summary_table(report);

  Manifest m = base;
  m.inputs = {{"model", model_path.string()}, {"data", stem.string()}};
  m.effective_config = {{"threshold", options.threshold},
                        {"ttlc_bin_width", options.motion.bin_width},
                        {"seed", options.motion.seed}};
  m.seed = options.motion.seed;
  m.outputs = {"report.json", "roc.csv", "per_dia_auc.csv", "motion.csv", "summary.txt"};
  m.write(out);
  return 0;
}

int cmd_predict(const Common& c, const Manifest& base) {
  if (c.model_path.empty() || c.data_path.empty()) throw UsageError("predict needs --model and --data");
  const fs::path model_path = resolve_model(c.model_path);
  const fs::path stem = resolve_dataset(c.data_path, "test");
  const fs::path out(c.out);
  const auto model = train::load_model(model_path);
  const auto dataset = data::load_dataset(stem);
  const auto predictions = model.predict_batch(dataset.samples);

  std::string csv = "episode_id,vehicle_id,frame_id,true_area";
  for (std::size_t a = 1; a <= model.layout.areas; ++a) {
    const auto n = std::to_string(a);
    csv += ",w" + n + ",mean_s" + n + ",sd_s" + n + ",mean_t" + n + ",sd_t" + n;
  }
  csv += '\n';
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& s = dataset.samples[i];
    csv += std::to_string(s.episode_id) + ',' + std::to_string(s.vehicle_id) + ',' +
           std::to_string(s.frame_id) + ',' + std::to_string(s.label.area);
    for (const auto& area : predictions[i].areas) {
      const auto ms = mdn::marginal_s(area);
      const auto mt = mdn::marginal_t(area);
      csv += ',' + data::format_double(area.weight) + ',' + data::format_double(ms.mean) + ',' +
             data::format_double(ms.stddev) + ',' + data::format_double(mt.mean) + ',' +
             data::format_double(mt.stddev);
    }
    csv += '\n';
  }
  data::write_text_file(out / "predictions.csv", csv);
  spdlog::info("wrote predictions for {} samples", predictions.size());

  Manifest m = base;
  m.inputs = {{"model", model_path.string()}, {"data", stem.string()}};
  m.outputs = {"predictions.csv"};
  m.write(out);
  return 0;
}

int cmd_sample(const Common& c, CLI::Option* seed_opt, std::size_t count,
               std::optional<std::int64_t> episode, const Manifest& base) {
  if (c.model_path.empty() || c.data_path.empty()) throw UsageError("sample needs --model and --data");
  const std::uint64_t seed = seed_opt->count() ? c.seed : 1;
  const fs::path model_path = resolve_model(c.model_path);
  const fs::path stem = resolve_dataset(c.data_path, "test");
  const fs::path out(c.out);
  const auto model = train::load_model(model_path);
  auto dataset = data::load_dataset(stem);
  if (episode) {
    std::erase_if(dataset.samples, [&](const data::Sample& s) { return s.episode_id != *episode; });
    if (dataset.samples.empty()) throw InputError("episode " + std::to_string(*episode) + " not in dataset");
  }
  const auto predictions = model.predict_batch(dataset.samples);
  std::vector<std::int64_t> frames;
  for (const auto& s : dataset.samples) frames.push_back(s.frame_id);
  const auto exported = eval::export_samples(predictions, frames, count, seed);
  data::write_text_file(out / "samples.csv", eval::samples_csv(exported));
  data::write_text_file(out / "bands.csv", eval::bands_csv(exported));
  spdlog::info("sampled {} points over {} frames", exported.rows.size(), frames.size());

  Manifest m = base;
  m.inputs = {{"model", model_path.string()}, {"data", stem.string()}};
  m.effective_config = {{"count", count}};
  if (episode) m.effective_config["episode"] = *episode;
  m.seed = seed;
  m.outputs = {"samples.csv", "bands.csv"};
  m.write(out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  init_logging();
  CLI::App app{"SIMP: semantic intention and motion prediction", "simp"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1, 1);

  Common c;
  std::map<std::string, CLI::Option*> seed_opts;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", c.config_path, "JSON config; flags override it")->check(CLI::ExistingFile);
    seed_opts[sub->get_name()] = sub->add_option("--seed", c.seed, "RNG seed");
    auto* out = sub->add_option("-o,--out", c.out, "Output directory");
    if (needs_out) out->required();
  };

  std::optional<std::size_t> episodes;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic highway corpus");
  add_common(synth, true);
  synth->add_option("--episodes", episodes, "Number of scenarios");

  std::string column_map;
  auto* ingest = app.add_subcommand("ingest", "Read an NGSIM-style trajectory CSV");
  add_common(ingest, true);
  ingest->add_option("--data", c.data_path, "Input CSV")->check(CLI::ExistingFile);
  ingest->add_option("--column-map", column_map, "JSON column mapping")->check(CLI::ExistingFile);

  std::optional<double> train_fraction;
  auto* extract = app.add_subcommand("extract", "Label episodes and split a dataset");
  add_common(extract, true);
  extract->add_option("--data", c.data_path, "Trajectory CSV or synth/ingest directory");
  extract->add_option("--train-fraction", train_fraction, "Episode share for training")
      ->check(CLI::Range(0.0, 1.0));

  std::optional<double> w1, w2;
  std::optional<std::size_t> epochs;
  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train, true);
  train->add_option("--data", c.data_path, "Dataset stem or directory");
  train->add_option("--w1", w1, "Likelihood term weight");
  train->add_option("--w2", w2, "Area cross-entropy weight");
  train->add_option("--epochs", epochs, "Epoch count");

  std::optional<double> threshold;
  auto* evaluate = app.add_subcommand("eval", "Evaluate a model on a dataset");
  add_common(evaluate, true);
  evaluate->add_option("--model", c.model_path, "Model file or directory");
  evaluate->add_option("--data", c.data_path, "Dataset stem or directory");
  evaluate->add_option("--threshold", threshold, "Lane-change decision threshold")
      ->check(CLI::Range(0.0, 1.0));

  auto* predict = app.add_subcommand("predict", "Write per-sample mixture predictions");
  add_common(predict, true);
  predict->add_option("--model", c.model_path, "Model file or directory");
  predict->add_option("--data", c.data_path, "Dataset stem or directory");

  std::size_t count = 50;
  std::optional<std::int64_t> episode;
  auto* sample = app.add_subcommand("sample", "Draw points from predicted mixtures");
  add_common(sample, true);
  sample->add_option("--model", c.model_path, "Model file or directory");
  sample->add_option("--data", c.data_path, "Dataset stem or directory");
  sample->add_option("--count", count, "Points per frame");
  sample->add_option("--episode", episode, "Restrict to one episode id");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::usage);
  }

  CLI::App* chosen = app.get_subcommands().front();
  Manifest base;
  base.subcommand = chosen->get_name();
  base.args = args;
  base.config_path = c.config_path;
  try {
    fs::create_directories(c.out);
    CLI::Option* seed_opt = seed_opts.at(base.subcommand);
    if (chosen == synth) return cmd_synth(c, seed_opt, episodes, base);
    if (chosen == ingest) return cmd_ingest(c, column_map, base);
    if (chosen == extract) return cmd_extract(c, seed_opt, train_fraction, base);
    if (chosen == train) return cmd_train(c, seed_opt, w1, w2, epochs, base);
    if (chosen == evaluate) return cmd_eval(c, threshold, base);
    if (chosen == predict) return cmd_predict(c, base);
    return cmd_sample(c, seed_opt, count, episode, base);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.category() == ErrorCategory::usage) std::cerr << chosen->help();
    return exit_code(e.category());
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("configuration error: {}", e.what());
    return exit_code(ErrorCategory::data);
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return exit_code(ErrorCategory::data);
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace simp::cli
