#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace simp::data {

/// One 10 Hz sample of one vehicle. Units pass through from the source
/// (NGSIM US-101 is already in feet).
struct TrajectoryRecord {
  std::int64_t vehicle_id = 0;
  std::int64_t frame_id = 0;
  double x = 0.0;  // lateral
  double y = 0.0;  // longitudinal
  double v = 0.0;  // velocity
  int lane = 1;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Source column names for the six required fields.
struct ColumnMap {
  std::string vehicle_id = "Vehicle_ID";
  std::string frame_id = "Frame_ID";
  std::string x = "Local_X";
  std::string y = "Local_Y";
  std::string velocity = "v_Vel";
  std::string lane = "Lane_ID";

  static ColumnMap from_json(const nlohmann::json& doc);
};

struct IngestReport {
  std::vector<TrajectoryRecord> records;  // sorted by (vehicle, frame)
  std::size_t rows_read = 0;
  std::size_t malformed_rows = 0;
  std::size_t duplicate_rows = 0;
  std::vector<std::string> warnings;  // first few problems, for the log
};

/// Parses CSV text. Throws DataError when a mapped column is missing from
/// the header; malformed rows are skipped and counted.
IngestReport parse_trajectory_csv(std::string_view text, const ColumnMap& columns = {});
IngestReport ingest_csv(const std::filesystem::path& path, const ColumnMap& columns = {});

/// Writes records with the default (NGSIM) column names.
std::string trajectory_csv(const std::vector<TrajectoryRecord>& records);
void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRecord>& records);

// Shared text helpers.
std::string format_double(double value);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace simp::data
