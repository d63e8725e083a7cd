#include "simp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <random>
#include <set>

#include "json.hpp"
#include "simp/error.hpp"
#include "simp/trajectory.hpp"

namespace simp::data {
namespace {

constexpr std::string_view kIdColumns[] = {"episode_id", "vehicle_id", "frame_id"};
constexpr std::string_view kLabelColumns[] = {"area", "y_s", "y_t"};

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("dataset line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("dataset line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

DatasetHeader DatasetHeader::canonical() {
  DatasetHeader h;
  for (auto name : scene::feature_names()) h.feature_names.emplace_back(name);
  for (auto unit : scene::feature_units()) h.feature_units.emplace_back(unit);
  return h;
}

std::vector<std::int64_t> Dataset::episode_ids() const {
  std::set<std::int64_t> ids;
  for (const auto& s : samples) ids.insert(s.episode_id);
  return {ids.begin(), ids.end()};
}

std::size_t Dataset::lane_change_samples() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                [](const Sample& s) { return s.label.area != 5; }));
}

std::size_t Dataset::lane_keep_samples() const { return samples.size() - lane_change_samples(); }

std::filesystem::path features_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".features.csv");
}

std::filesystem::path meta_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".meta.json");
}

std::string features_csv(const Dataset& dataset) {
  std::string out;
  for (auto c : kIdColumns) {
    out += c;
    out += ',';
  }
  for (const auto& name : dataset.header.feature_names) {
    out += name;
    out += ',';
  }
  out += "area,y_s,y_t\n";
  for (const auto& s : dataset.samples) {
    out += std::to_string(s.episode_id) + ',' + std::to_string(s.vehicle_id) + ',' +
           std::to_string(s.frame_id) + ',';
    for (double f : s.features) {
      out += format_double(f);
      out += ',';
    }
    out += std::to_string(s.label.area) + ',' + format_double(s.label.y_s) + ',' +
           format_double(s.label.y_t) + '\n';
  }
  return out;
}

std::string meta_json(const Dataset& dataset) {
  std::vector<std::size_t> per_area(scene::kAreaCount, 0);
  for (const auto& s : dataset.samples) {
    if (s.label.area >= 1 && s.label.area <= scene::kAreaCount) ++per_area[s.label.area - 1];
  }
  nlohmann::ordered_json doc;
  doc["format"] = "simp-dataset";
  doc["format_version"] = dataset.header.format_version;
  doc["feature_names"] = dataset.header.feature_names;
  doc["feature_units"] = dataset.header.feature_units;
  doc["feature_ordering_hash"] = hash_hex(scene::feature_ordering_hash());
  doc["label_columns"] = {"area", "y_s", "y_t"};
  doc["label_units"] = {"index 1..5", "ft", "s"};
  if (dataset.header.normalization) {
    doc["normalization"] = {{"mean", dataset.header.normalization->mean},
                            {"stddev", dataset.header.normalization->stddev}};
  } else {
    doc["normalization"] = nullptr;
  }
  doc["composition"] = {{"samples", dataset.samples.size()},
                        {"episodes", dataset.episode_ids().size()},
                        {"lane_change_samples", dataset.lane_change_samples()},
                        {"lane_keep_samples", dataset.lane_keep_samples()},
                        {"samples_per_area", per_area}};
  return doc.dump(2) + "\n";
}

Dataset parse_dataset(std::string_view csv, std::string_view meta_text) {
  Dataset dataset;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
    dataset.header.format_version = meta.at("format_version").get<int>();
    dataset.header.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    dataset.header.feature_units = meta.at("feature_units").get<std::vector<std::string>>();
    if (!meta.at("normalization").is_null()) {
      Normalization n;
      n.mean = meta["normalization"].at("mean").get<std::vector<double>>();
      n.stddev = meta["normalization"].at("stddev").get<std::vector<double>>();
      dataset.header.normalization = std::move(n);
    }
    if (meta.at("feature_ordering_hash").get<std::string>() !=
        hash_hex(scene::feature_ordering_hash())) {
      throw DataError("dataset feature ordering hash does not match this build");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset metadata: ") + e.what());
  }
  if (dataset.header.format_version != kDatasetFormatVersion) {
    throw DataError("unsupported dataset format version");
  }
  if (dataset.header.feature_names.size() != scene::kFeatureCount) {
    throw DataError("dataset declares " + std::to_string(dataset.header.feature_names.size()) +
                    " features, expected " + std::to_string(scene::kFeatureCount));
  }

  const std::size_t expected_cols = 3 + scene::kFeatureCount + 3;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected_cols) {
      throw DataError("dataset line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " columns, expected " +
                      std::to_string(expected_cols));
    }
    if (!header_seen) {
      for (std::size_t i = 0; i < scene::kFeatureCount; ++i) {
        if (fields[3 + i] != dataset.header.feature_names[i]) {
          throw DataError("dataset column '" + std::string(fields[3 + i]) +
                          "' does not match metadata ordering");
        }
      }
      header_seen = true;
      continue;
    }
    Sample s;
    s.episode_id = parse_int(fields[0], line_no);
    s.vehicle_id = parse_int(fields[1], line_no);
    s.frame_id = parse_int(fields[2], line_no);
    for (std::size_t i = 0; i < scene::kFeatureCount; ++i) {
      s.features[i] = parse_double(fields[3 + i], line_no);
    }
    s.label.area = static_cast<int>(parse_int(fields[3 + scene::kFeatureCount], line_no));
    s.label.y_s = parse_double(fields[4 + scene::kFeatureCount], line_no);
    s.label.y_t = parse_double(fields[5 + scene::kFeatureCount], line_no);
    if (s.label.area < 1 || s.label.area > scene::kAreaCount) {
      throw DataError("dataset line " + std::to_string(line_no) + ": area out of range");
    }
    dataset.samples.push_back(s);
  }
  if (!header_seen) throw DataError("dataset CSV has no header");
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& stem) {
  write_text_file(features_path(stem), features_csv(dataset));
  write_text_file(meta_path(stem), meta_json(dataset));
}

Dataset load_dataset(const std::filesystem::path& stem) {
  return parse_dataset(read_text_file(features_path(stem)), read_text_file(meta_path(stem)));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("train fraction must lie strictly between 0 and 1");
  }
  auto ids = dataset.episode_ids();
  if (ids.size() < 2) throw DataError("cannot split fewer than two episodes");

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  const std::set<std::int64_t> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  Dataset train;
  Dataset test;
  train.header = dataset.header;
  test.header = dataset.header;
  for (const auto& s : dataset.samples) {
    (train_ids.contains(s.episode_id) ? train : test).samples.push_back(s);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace simp::data
