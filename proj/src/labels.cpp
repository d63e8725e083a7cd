#include "simp/labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simp/error.hpp"

namespace simp::scene {
namespace {

// Labels are produced on a 10 Hz grid; rounding to microseconds removes the
// representation noise of frame_id / 10.
double round_time(double t) { return std::round(t * 1e6) / 1e6; }

}  // namespace

int insertion_area(Direction direction, bool ahead_of_reference) {
  if (direction == Direction::left) return ahead_of_reference ? 1 : 2;
  return ahead_of_reference ? 3 : 4;
}

Intention merge_intentions(int area) {
  switch (area) {
    case 1:
    case 2:
      return Intention::lcl;
    case 3:
    case 4:
      return Intention::lcr;
    case 5:
      return Intention::lk;
    default:
      throw InputError("area " + std::to_string(area) + " outside 1..5");
  }
}

Label crossing_label(const SceneFrame& crossing_scene, Direction direction) {
  const Slot ref_slot = direction == Direction::left ? Slot::left_ref : Slot::right_ref;
  const auto& ref = crossing_scene.slot(ref_slot);
  Label label;
  label.y_t = 0.0;
  if (!ref) {
    // Empty target lane: the stand-in reference sits abeam.
    label.area = insertion_area(direction, true);
    label.y_s = 0.0;
    return label;
  }
  const double offset = crossing_scene.predicted.y - ref->y;
  label.area = insertion_area(direction, offset >= 0.0);
  label.y_s = std::abs(offset);
  return label;
}

std::vector<LabeledFrame> label_episode(std::span<const SceneFrame> trajectory,
                                        const EpisodeEvent& event, const SceneConfig& config) {
  std::vector<LabeledFrame> out;
  if (const auto* change = std::get_if<LaneChangeEvent>(&event)) {
    if (!change->crossing_scene) {
      throw DataError("lane-change episode has no crossing frame");
    }
    const double crossing_time = change->crossing_scene->timestamp;
    const Label at_crossing = crossing_label(*change->crossing_scene, change->direction);

    std::vector<const SceneFrame*> eligible;
    for (const auto& frame : trajectory) {
      const double ttlc = round_time(crossing_time - frame.timestamp);
      if (ttlc >= 0.0 && ttlc <= kTtlcCap) eligible.push_back(&frame);
    }
    if (eligible.size() > kWindowFrames) {
      eligible.erase(eligible.begin(), eligible.end() - kWindowFrames);
    }
    for (const SceneFrame* frame : eligible) {
      LabeledFrame lf;
      lf.features = extract_features(*frame, config);
      lf.label = at_crossing;
      lf.label.y_t = std::clamp(round_time(crossing_time - frame->timestamp), 0.0, kTtlcCap);
      lf.timestamp = frame->timestamp;
      lf.frame_id = frame->frame_id;
      out.push_back(lf);
    }
    return out;
  }

  if (trajectory.empty()) return out;
  const SceneFrame& last = trajectory.back();
  const auto& front = last.slot(Slot::front_ref);
  const double gap = front ? front->y - last.predicted.y : config.imputed_distance;
  for (const auto& frame : trajectory) {
    LabeledFrame lf;
    lf.features = extract_features(frame, config);
    lf.label = {.area = 5, .y_s = std::abs(gap), .y_t = kTtlcCap};
    lf.timestamp = frame.timestamp;
    lf.frame_id = frame.frame_id;
    out.push_back(lf);
  }
  return out;
}

}  // namespace simp::scene
