#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simp/features.hpp"
#include "simp/labels.hpp"

namespace simp::data {

inline constexpr int kDatasetFormatVersion = 1;

/// Per-feature z-score constants.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct DatasetHeader {
  int format_version = kDatasetFormatVersion;
  std::vector<std::string> feature_names;
  std::vector<std::string> feature_units;
  std::optional<Normalization> normalization;

  static DatasetHeader canonical();
  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Sample {
  scene::FeatureVector features{};
  scene::Label label;
  std::int64_t episode_id = 0;
  std::int64_t vehicle_id = 0;
  std::int64_t frame_id = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  DatasetHeader header = DatasetHeader::canonical();
  std::vector<Sample> samples;

  std::vector<std::int64_t> episode_ids() const;  // sorted, unique
  std::size_t lane_change_samples() const;
  std::size_t lane_keep_samples() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Files of a dataset stored under a stem: <stem>.features.csv, <stem>.meta.json.
std::filesystem::path features_path(const std::filesystem::path& stem);
std::filesystem::path meta_path(const std::filesystem::path& stem);

std::string features_csv(const Dataset& dataset);
std::string meta_json(const Dataset& dataset);
/// Throws DataError on schema problems (ordering hash or column mismatch).
Dataset parse_dataset(std::string_view features_csv_text, std::string_view meta_json_text);

void save_dataset(const Dataset& dataset, const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

/// Episode-level split: every frame of an episode lands on one side. The
/// train side receives round(fraction * episodes) episodes, clamped so both
/// sides are non-empty. Throws DataError with fewer than two episodes.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed);

}  // namespace simp::data
