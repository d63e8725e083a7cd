#include "simp/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "simp/error.hpp"

namespace simp::data {
namespace {

constexpr std::size_t kMaxWarnings = 20;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

/// Integers in NGSIM exports sometimes carry a trailing ".0".
std::optional<std::int64_t> parse_integer(std::string_view s) {
  if (auto i = parse_number<std::int64_t>(s)) return i;
  if (auto d = parse_number<double>(s); d && *d == static_cast<double>(static_cast<std::int64_t>(*d))) {
    return static_cast<std::int64_t>(*d);
  }
  return std::nullopt;
}

}  // namespace

ColumnMap ColumnMap::from_json(const nlohmann::json& doc) {
  ColumnMap map;
  if (!doc.is_object()) throw DataError("column map must be a JSON object");
  map.vehicle_id = doc.value("vehicle_id", map.vehicle_id);
  map.frame_id = doc.value("frame_id", map.frame_id);
  map.x = doc.value("x", map.x);
  map.y = doc.value("y", map.y);
  map.velocity = doc.value("velocity", map.velocity);
  map.lane = doc.value("lane", map.lane);
  return map;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

IngestReport parse_trajectory_csv(std::string_view text, const ColumnMap& columns) {
  IngestReport report;
  auto warn = [&](std::string msg) {
    if (report.warnings.size() < kMaxWarnings) report.warnings.push_back(std::move(msg));
  };

  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    return true;
  };

  std::string_view header;
  if (!next_line(header)) throw DataError("trajectory CSV is empty (no header)");
  const auto names = split_csv_line(header);
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw DataError("trajectory CSV lacks required column '" + name + "'");
    return it->second;
  };
  const std::size_t c_vehicle = column(columns.vehicle_id);
  const std::size_t c_frame = column(columns.frame_id);
  const std::size_t c_x = column(columns.x);
  const std::size_t c_y = column(columns.y);
  const std::size_t c_v = column(columns.velocity);
  const std::size_t c_lane = column(columns.lane);
  const std::size_t needed = std::max({c_vehicle, c_frame, c_x, c_y, c_v, c_lane}) + 1;

  std::string_view line;
  std::size_t line_no = 1;
  while (next_line(line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto fields = split_csv_line(line);
    if (fields.size() < needed) {
      ++report.malformed_rows;
      warn("line " + std::to_string(line_no) + ": expected at least " + std::to_string(needed) +
           " fields");
      continue;
    }
    const auto vehicle = parse_integer(fields[c_vehicle]);
    const auto frame = parse_integer(fields[c_frame]);
    const auto x = parse_number<double>(fields[c_x]);
    const auto y = parse_number<double>(fields[c_y]);
    const auto v = parse_number<double>(fields[c_v]);
    const auto lane = parse_integer(fields[c_lane]);
    if (!vehicle || !frame || !x || !y || !v || !lane) {
      ++report.malformed_rows;
      warn("line " + std::to_string(line_no) + ": unparseable field");
      continue;
    }
    report.records.push_back({*vehicle, *frame, *x, *y, *v, static_cast<int>(*lane)});
  }

  std::stable_sort(report.records.begin(), report.records.end(),
                   [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
                     return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id
                                                         : a.frame_id < b.frame_id;
                   });
  auto last = std::unique(report.records.begin(), report.records.end(),
                          [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
                            return a.vehicle_id == b.vehicle_id && a.frame_id == b.frame_id;
                          });
  report.duplicate_rows = static_cast<std::size_t>(report.records.end() - last);
  if (report.duplicate_rows > 0) {
    warn(std::to_string(report.duplicate_rows) + " duplicate (vehicle, frame) rows dropped");
  }
  report.records.erase(last, report.records.end());
  return report;
}

IngestReport ingest_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  return parse_trajectory_csv(read_text_file(path), columns);
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
  const ColumnMap names;
  std::string out = names.vehicle_id + "," + names.frame_id + "," + names.x + "," + names.y +
                    "," + names.velocity + "," + names.lane + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.vehicle_id);
    out += ',';
    out += std::to_string(r.frame_id);
    out += ',';
    out += format_double(r.x);
    out += ',';
    out += format_double(r.y);
    out += ',';
    out += format_double(r.v);
    out += ',';
    out += std::to_string(r.lane);
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRecord>& records) {
  write_text_file(path, trajectory_csv(records));
}

}  // namespace simp::data
