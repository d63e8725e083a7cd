#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "simp/scene.hpp"

namespace simp::scene {

inline constexpr std::size_t kFeatureCount = 25;
using FeatureVector = std::array<double, kFeatureCount>;

/// Canonical feature ordering:
///   0      v_pred            predicted vehicle speed (ft/s)
///   1      d_clc_pred        lateral offset from current lane center (ft)
///   2..4   v_ref_*           left / front / right reference speed (ft/s)
///   5..7   d_ref_*           left / front / right reference longitudinal offset (ft)
///   8..9   dx_ref_*          left / right reference lateral offset (ft)
///   10..11 theta_ref_*       left / right reference bearing, atan2(left offset, forward offset) (rad)
///   12     ittc_front_pred   front reference vs predicted vehicle (1/s)
///   13..16 v_o_*             left-front / left-rear / right-front / right-rear speeds (ft/s)
///   17..20 d_o_*             their longitudinal offsets from the predicted vehicle (ft)
///   21..24 ittc_o_*          their iTTC relative to the matching reference (1/s)
std::span<const std::string_view> feature_names();
std::span<const std::string_view> feature_units();

/// FNV-1a hash of the comma-joined feature names; pins the ordering.
std::uint64_t feature_ordering_hash();

/// Inverse time-to-collision, (follower speed - leader speed) / gap with the
/// gap floored (sign-preserving) and the result clamped.
double inverse_ttc(const VehicleState& follower, const VehicleState& leader,
                   const SceneConfig& config = {});

/// The scene with every empty slot replaced by its imputed stand-in.
std::array<VehicleState, kSlotCount> resolve_slots(const SceneFrame& scene,
                                                   const SceneConfig& config = {});

FeatureVector extract_features(const SceneFrame& scene, const SceneConfig& config = {});

}  // namespace simp::scene
