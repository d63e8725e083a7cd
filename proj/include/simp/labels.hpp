#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "simp/features.hpp"
#include "simp/scene.hpp"

namespace simp::scene {

inline constexpr double kTtlcCap = 4.0;        // seconds; lane-keep TTLC
inline constexpr std::size_t kWindowFrames = 40;  // 4 s at 10 Hz
inline constexpr int kAreaCount = 5;

/// Insertion areas (1-based, as stored in datasets):
///   1 left-front gap, 2 left-rear gap, 3 right-front gap, 4 right-rear gap,
///   5 own-lane front gap (lane keep).
enum class Direction { left, right };
enum class Intention { lcl, lcr, lk };

struct Label {
  int area = 5;
  double y_s = 0.0;  // feet from the inserted area's reference vehicle
  double y_t = kTtlcCap;  // seconds to lane change

  friend bool operator==(const Label&, const Label&) = default;
};

int insertion_area(Direction direction, bool ahead_of_reference);

/// {1,2} -> LCL, {3,4} -> LCR, {5} -> LK. Throws InputError otherwise.
Intention merge_intentions(int area);

struct LaneChangeEvent {
  Direction direction = Direction::left;
  /// Scene at the crossing instant, built around the origin lane so the
  /// side reference on the target lane is populated. Its timestamp is the
  /// crossing time.
  std::optional<SceneFrame> crossing_scene;
};

struct LaneKeepEvent {};

using EpisodeEvent = std::variant<LaneChangeEvent, LaneKeepEvent>;

struct LabeledFrame {
  FeatureVector features{};
  Label label;
  double timestamp = 0.0;
  std::int64_t frame_id = 0;
};

/// Area and insertion distance implied by a crossing scene.
Label crossing_label(const SceneFrame& crossing_scene, Direction direction);

/// Labels a time-ordered trajectory. Lane changes keep the last (up to) 40
/// frames not later than the crossing with y_t = crossing time - frame time;
/// lane keeps label every frame area 5, y_t = 4 s, y_s = front-reference gap
/// at the final frame. Throws DataError if a lane change lacks its crossing.
std::vector<LabeledFrame> label_episode(std::span<const SceneFrame> trajectory,
                                        const EpisodeEvent& event,
                                        const SceneConfig& config = {});

}  // namespace simp::scene
