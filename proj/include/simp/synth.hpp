#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "simp/labels.hpp"
#include "simp/scene.hpp"
#include "simp/trajectory.hpp"

namespace simp::data {

/// Synthetic multi-lane highway. Each scenario is an independent stretch of
/// road with one scripted subject vehicle; scenarios occupy disjoint frame
/// ranges and vehicle-id blocks, so a corpus reads like one long recording.
struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t episodes = 600;  // scenarios, one subject each
  int lane_count = 3;
  double lane_width = 12.0;
  double frame_rate = 10.0;
  double duration = 12.0;  // seconds per scenario

  double span_behind = 350.0;  // traffic placed this far behind the subject (ft)
  double span_ahead = 450.0;   // and this far ahead
  double gap_min = 60.0;       // initial spacing range (ft)
  double gap_max = 160.0;
  double speed_mean = 60.0;    // desired speed (ft/s)
  double speed_stddev = 3.0;
  double lane_speed_step = 3.0;  // lower lane ids run faster by this much per lane
  double accel_noise = 0.5;      // ft/s^2, per step

  double lane_change_probability = 0.6;
  double maneuver_min = 3.0;       // lateral transition duration range (s)
  double maneuver_max = 5.0;
  double preparation_min = 5.0;    // gap alignment starts this long before crossing (s)
  double preparation_max = 7.0;
  double min_accepted_gap = 50.0;  // smallest gap a subject will merge into (ft)
  double insertion_min = 0.15;     // insertion point as a fraction of the gap,
  double insertion_max = 0.4;      // measured from the gap's reference vehicle
  double drift_max = 3.0;          // lateral drift toward the target lane before the move (ft)

  double lateral_offset_stddev = 0.3;  // per-vehicle static offset from lane center (ft)
  double lateral_noise = 0.15;         // stationary std dev of lateral jitter (ft)

  void validate() const;
  scene::LaneGeometry geometry() const { return {lane_width, lane_count}; }
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// What the generator scripted for one scenario's subject.
struct ScriptedEpisode {
  std::size_t scenario = 0;
  std::int64_t vehicle_id = 0;
  bool lane_change = false;
  scene::Direction direction = scene::Direction::left;
  int origin_lane = 0;
  int target_lane = 0;
  std::int64_t crossing_frame = -1;  // first frame past the lane mark
  int area = 5;
  std::int64_t reference_id = -1;  // target-lane reference at the crossing
  double y_s = 0.0;
};

struct SynthCorpus {
  std::vector<TrajectoryRecord> records;  // sorted by (vehicle, frame)
  std::vector<ScriptedEpisode> truth;
};

SynthCorpus generate_synthetic(const SynthConfig& config);

nlohmann::json truth_json(const std::vector<ScriptedEpisode>& truth);
std::vector<ScriptedEpisode> truth_from_json(const nlohmann::json& doc);

}  // namespace simp::data
