#include "simp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simp/error.hpp"

namespace simp::scene {
namespace {

double distance(const VehicleState& a, const VehicleState& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Keeps the candidate minimizing key; ties go to the lower id.
template <typename Key>
void keep_best(std::optional<VehicleState>& best, double& best_key, const VehicleState& candidate,
               Key key) {
  const double k = key(candidate);
  if (!best || k < best_key || (k == best_key && candidate.id < best->id)) {
    best = candidate;
    best_key = k;
  }
}

struct SideSlots {
  std::optional<VehicleState> front, ref, rear;
};

SideSlots fill_side(std::span<const VehicleState> vehicles, const VehicleState& pred, int lane,
                    const SceneConfig& config) {
  SideSlots side;
  double key = 0.0;
  auto in_range = [&](const VehicleState& v) {
    return v.id != pred.id && v.lane == lane && std::abs(v.y - pred.y) <= config.existence_radius;
  };
  for (const auto& v : vehicles) {
    if (in_range(v)) keep_best(side.ref, key, v, [&](const VehicleState& c) { return distance(c, pred); });
  }
  if (!side.ref) return side;
  const VehicleState ref = *side.ref;
  double front_key = 0.0;
  double rear_key = 0.0;
  for (const auto& v : vehicles) {
    if (!in_range(v) || v.id == ref.id) continue;
    if (v.y > ref.y) {
      keep_best(side.front, front_key, v, [&](const VehicleState& c) { return c.y - ref.y; });
    } else if (v.y < ref.y) {
      keep_best(side.rear, rear_key, v, [&](const VehicleState& c) { return ref.y - c.y; });
    }
  }
  return side;
}

}  // namespace

double LaneGeometry::boundary(int lane_a, int lane_b) const {
  if (std::abs(lane_a - lane_b) != 1) {
    throw InputError("lanes " + std::to_string(lane_a) + " and " + std::to_string(lane_b) +
                     " are not adjacent");
  }
  return static_cast<double>(std::min(lane_a, lane_b)) * lane_width;
}

int LaneGeometry::lane_at(double x) const {
  const int lane = static_cast<int>(std::floor(x / lane_width)) + 1;
  return std::clamp(lane, 1, lane_count);
}

SceneFrame build_scene(std::span<const VehicleState> vehicles, std::int64_t predicted_id,
                       const LaneGeometry& geometry, const SceneConfig& config,
                       std::optional<int> lane_override, double timestamp,
                       std::int64_t frame_id) {
  const auto it = std::find_if(vehicles.begin(), vehicles.end(),
                               [&](const VehicleState& v) { return v.id == predicted_id; });
  if (it == vehicles.end()) {
    throw InputError("predicted vehicle " + std::to_string(predicted_id) + " not in frame");
  }

  SceneFrame scene;
  scene.timestamp = timestamp;
  scene.frame_id = frame_id;
  scene.predicted = *it;
  scene.lane = lane_override.value_or(it->lane);
  if (!geometry.has_lane(scene.lane)) {
    throw InputError("lane " + std::to_string(scene.lane) + " outside the road definition");
  }
  scene.lane_width = geometry.lane_width;
  scene.lane_center = geometry.center(scene.lane);
  scene.left_lane_exists = geometry.has_lane(scene.lane - 1);
  scene.right_lane_exists = geometry.has_lane(scene.lane + 1);
  scene.left_lane_center = geometry.center(scene.lane - 1);
  scene.right_lane_center = geometry.center(scene.lane + 1);

  const VehicleState& pred = *it;
  double key = 0.0;
  for (const auto& v : vehicles) {
    if (v.id == pred.id || v.lane != scene.lane || v.y <= pred.y) continue;
    if (v.y - pred.y > config.existence_radius) continue;
    keep_best(scene.slot(Slot::front_ref), key, v,
              [&](const VehicleState& c) { return distance(c, pred); });
  }

  if (scene.left_lane_exists) {
    auto side = fill_side(vehicles, pred, scene.lane - 1, config);
    scene.slot(Slot::left_front) = side.front;
    scene.slot(Slot::left_ref) = side.ref;
    scene.slot(Slot::left_rear) = side.rear;
  }
  if (scene.right_lane_exists) {
    auto side = fill_side(vehicles, pred, scene.lane + 1, config);
    scene.slot(Slot::right_front) = side.front;
    scene.slot(Slot::right_ref) = side.ref;
    scene.slot(Slot::right_rear) = side.rear;
  }
  return scene;
}

}  // namespace simp::scene
