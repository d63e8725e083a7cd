#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simp/dataset.hpp"
#include "simp/labels.hpp"
#include "simp/scene.hpp"
#include "simp/trajectory.hpp"

namespace simp::data {

struct ExtractionConfig {
  scene::LaneGeometry geometry{};
  scene::SceneConfig scene{};
  double frame_rate = 10.0;                // Hz
  std::size_t window_frames = 40;          // frames kept before a crossing
  std::size_t lane_keep_min_frames = 80;   // stable stretch needed for a lane-keep window
  double lane_keep_ratio_cap = 2.0;        // lane-keep samples <= cap * lane-change samples; <= 0 disables
  int confirm_frames = 3;                  // lateral crossing must lie within +-N frames of the lane-id change
};

struct EpisodeInfo {
  std::int64_t episode_id = 0;
  std::int64_t vehicle_id = 0;
  bool lane_change = false;
  scene::Direction direction = scene::Direction::left;
  std::int64_t crossing_frame = -1;  // -1 for lane keeps
  scene::Label label;                // label at the crossing (or of the lane-keep window)
  std::size_t samples = 0;
};

struct ExtractionReport {
  Dataset dataset;
  std::vector<EpisodeInfo> episodes;
  std::size_t skipped_vehicles = 0;     // tracks with fewer than two frames
  std::size_t rejected_crossings = 0;   // lane-id changes without a matching lateral crossing
  std::size_t dropped_lane_keep = 0;    // lane-keep windows removed by the ratio cap
};

/// Detects lane-mark crossings per vehicle and emits lane-change windows and
/// lane-keep windows as a labeled dataset. Episode ids follow (vehicle id,
/// first frame) order.
ExtractionReport extract_episodes(std::span<const TrajectoryRecord> records,
                                  const ExtractionConfig& config = {});

}  // namespace simp::data
