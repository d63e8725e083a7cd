#pragma once

// Scene construction around one predicted vehicle.
//
// Coordinates follow the NGSIM convention: x is lateral (feet, increasing to
// the right), y is longitudinal (feet, increasing in the driving direction).
// Lane ids start at 1 for the leftmost lane, so "left" means lane - 1.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace simp::scene {

struct VehicleState {
  std::int64_t id = 0;
  double x = 0.0;  // lateral, feet
  double y = 0.0;  // longitudinal, feet
  double v = 0.0;  // longitudinal velocity, feet/second
  int lane = 1;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Uniform-width lanes; lane l occupies [(l-1) w, l w) laterally.
struct LaneGeometry {
  double lane_width = 12.0;
  int lane_count = 5;

  bool has_lane(int lane) const { return lane >= 1 && lane <= lane_count; }
  double center(int lane) const { return (static_cast<double>(lane) - 0.5) * lane_width; }
  /// Lateral position of the mark between two adjacent lanes.
  double boundary(int lane_a, int lane_b) const;
  /// Lane containing lateral position x, clamped to the road.
  int lane_at(double x) const;
};

/// Surrounding-vehicle slots, numbered after the exemplar layout (car1..car7).
enum class Slot : std::size_t {
  left_front = 0,  // car1: ahead of the left reference
  left_ref,        // car2
  left_rear,       // car3: behind the left reference
  front_ref,       // car4: ahead in the predicted vehicle's lane
  right_front,     // car5
  right_ref,       // car6
  right_rear,      // car7
};
inline constexpr std::size_t kSlotCount = 7;

struct SceneConfig {
  double existence_radius = 250.0;  // longitudinal, feet
  double imputed_distance = 300.0;  // stand-in distance for missing vehicles
  double phantom_spacing = 5.0;     // front/rear phantom offset on a missing lane
  double min_gap = 1.0;             // iTTC gap floor, feet
  double ittc_limit = 2.0;          // |iTTC| clamp, 1/s
};

struct SceneFrame {
  double timestamp = 0.0;
  std::int64_t frame_id = 0;
  VehicleState predicted;
  int lane = 1;  // lane the scene is built around (usually predicted.lane)
  double lane_center = 0.0;
  double lane_width = 12.0;
  bool left_lane_exists = false;
  bool right_lane_exists = false;
  double left_lane_center = 0.0;
  double right_lane_center = 0.0;
  std::array<std::optional<VehicleState>, kSlotCount> slots{};

  const std::optional<VehicleState>& slot(Slot s) const {
    return slots[static_cast<std::size_t>(s)];
  }
  std::optional<VehicleState>& slot(Slot s) { return slots[static_cast<std::size_t>(s)]; }
};

/// Fills the seven slots from every vehicle visible in one frame. The lane
/// the scene is built around defaults to the predicted vehicle's lane id;
/// lane_override replaces it (used while a lane change is in progress).
/// Throws InputError when predicted_id is not among vehicles.
SceneFrame build_scene(std::span<const VehicleState> vehicles, std::int64_t predicted_id,
                       const LaneGeometry& geometry, const SceneConfig& config = {},
                       std::optional<int> lane_override = std::nullopt, double timestamp = 0.0,
                       std::int64_t frame_id = 0);

}  // namespace simp::scene
