#include "simp/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simp/error.hpp"

namespace simp::scene {
namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "v_pred",          "d_clc_pred",      "v_ref_left",       "v_ref_front",
    "v_ref_right",     "d_ref_left",      "d_ref_front",      "d_ref_right",
    "dx_ref_left",     "dx_ref_right",    "theta_ref_left",   "theta_ref_right",
    "ittc_front_pred", "v_o_left_front",  "v_o_left_rear",    "v_o_right_front",
    "v_o_right_rear",  "d_o_left_front",  "d_o_left_rear",    "d_o_right_front",
    "d_o_right_rear",  "ittc_o_left_front", "ittc_o_left_rear", "ittc_o_right_front",
    "ittc_o_right_rear",
};

constexpr std::array<std::string_view, kFeatureCount> kUnits = {
    "ft/s", "ft",  "ft/s", "ft/s", "ft/s", "ft",  "ft",  "ft",  "ft",
    "ft",   "rad", "rad",  "1/s",  "ft/s", "ft/s", "ft/s", "ft/s", "ft",
    "ft",   "ft",  "ft",   "1/s",  "1/s",  "1/s",  "1/s",
};

VehicleState stand_in(const VehicleState& pred, double x, double y) {
  return {.id = -1, .x = x, .y = y, .v = pred.v, .lane = 0};
}

}  // namespace

std::span<const std::string_view> feature_names() { return kNames; }
std::span<const std::string_view> feature_units() { return kUnits; }

std::uint64_t feature_ordering_hash() {
  std::uint64_t hash = 14695981039346656037ULL;
  auto mix = [&](unsigned char c) {
    hash ^= c;
    hash *= 1099511628211ULL;
  };
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (i > 0) mix(',');
    for (char c : kNames[i]) mix(static_cast<unsigned char>(c));
  }
  return hash;
}

double inverse_ttc(const VehicleState& follower, const VehicleState& leader,
                   const SceneConfig& config) {
  double gap = leader.y - follower.y;
  if (std::abs(gap) < config.min_gap) gap = std::signbit(gap) ? -config.min_gap : config.min_gap;
  const double ittc = (follower.v - leader.v) / gap;
  return std::clamp(ittc, -config.ittc_limit, config.ittc_limit);
}

std::array<VehicleState, kSlotCount> resolve_slots(const SceneFrame& scene,
                                                   const SceneConfig& config) {
  const VehicleState& p = scene.predicted;
  const double far = config.imputed_distance;
  std::array<VehicleState, kSlotCount> out{};
  auto pick = [&](Slot s, const VehicleState& fallback) {
    out[static_cast<std::size_t>(s)] = scene.slot(s).value_or(fallback);
  };

  pick(Slot::front_ref, stand_in(p, p.x, p.y + far));

  auto side = [&](bool exists, double lane_center, double phantom_x, Slot front, Slot ref,
                  Slot rear) {
    if (exists) {
      pick(ref, stand_in(p, lane_center, p.y + far));
      pick(front, stand_in(p, lane_center, p.y + far));
      pick(rear, stand_in(p, lane_center, p.y - far));
    } else {
      // No lane on this side: three phantoms bunched up, reference abeam.
      out[static_cast<std::size_t>(ref)] = stand_in(p, phantom_x, p.y);
      out[static_cast<std::size_t>(front)] = stand_in(p, phantom_x, p.y + config.phantom_spacing);
      out[static_cast<std::size_t>(rear)] = stand_in(p, phantom_x, p.y - config.phantom_spacing);
    }
  };
  side(scene.left_lane_exists, scene.left_lane_center, p.x - scene.lane_width, Slot::left_front,
       Slot::left_ref, Slot::left_rear);
  side(scene.right_lane_exists, scene.right_lane_center, p.x + scene.lane_width,
       Slot::right_front, Slot::right_ref, Slot::right_rear);
  return out;
}

FeatureVector extract_features(const SceneFrame& scene, const SceneConfig& config) {
  const VehicleState& p = scene.predicted;
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.v)) {
    throw InputError("predicted vehicle state is not finite");
  }
  const auto s = resolve_slots(scene, config);
  auto at = [&](Slot slot) -> const VehicleState& { return s[static_cast<std::size_t>(slot)]; };
  const auto& left = at(Slot::left_ref);
  const auto& front = at(Slot::front_ref);
  const auto& right = at(Slot::right_ref);

  auto bearing = [&](const VehicleState& ref) {
    // Positive toward the left-forward quadrant; x grows to the right.
    return std::atan2(-(ref.x - p.x), ref.y - p.y);
  };

  FeatureVector f{};
  f[0] = p.v;
  f[1] = p.x - scene.lane_center;
  f[2] = left.v;
  f[3] = front.v;
  f[4] = right.v;
  f[5] = left.y - p.y;
  f[6] = front.y - p.y;
  f[7] = right.y - p.y;
  f[8] = left.x - p.x;
  f[9] = right.x - p.x;
  f[10] = bearing(left);
  f[11] = bearing(right);
  f[12] = inverse_ttc(p, front, config);

  const std::array<Slot, 4> others = {Slot::left_front, Slot::left_rear, Slot::right_front,
                                      Slot::right_rear};
  for (std::size_t k = 0; k < others.size(); ++k) {
    const auto& o = at(others[k]);
    const bool is_left = k < 2;
    const bool is_front = k % 2 == 0;
    const auto& ref = is_left ? left : right;
    f[13 + k] = o.v;
    f[17 + k] = o.y - p.y;
    f[21 + k] = is_front ? inverse_ttc(ref, o, config) : inverse_ttc(o, ref, config);
  }

  for (double v : f) {
    if (!std::isfinite(v)) throw NumericError("feature extraction produced a non-finite value");
  }
  return f;
}

}  // namespace simp::scene
