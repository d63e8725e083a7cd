#include "simp/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "simp/error.hpp"

namespace simp::data {
namespace {

using scene::Direction;
using scene::SceneFrame;
using scene::VehicleState;

struct Crossing {
  std::size_t index = 0;  // first frame on the new side of the mark
  int from = 0;
  int to = 0;
};

struct PendingEpisode {
  EpisodeInfo info;
  std::int64_t first_frame = 0;
  std::vector<scene::LabeledFrame> frames;
};

class FrameIndex {
 public:
  explicit FrameIndex(std::span<const TrajectoryRecord> records) {
    for (const auto& r : records) {
      frames_[r.frame_id].push_back({r.vehicle_id, r.x, r.y, r.v, r.lane});
    }
  }

  std::span<const VehicleState> at(std::int64_t frame) const {
    auto it = frames_.find(frame);
    if (it == frames_.end()) return {};
    return it->second;
  }

 private:
  std::unordered_map<std::int64_t, std::vector<VehicleState>> frames_;
};

std::vector<Crossing> detect_crossings(std::span<const TrajectoryRecord> run,
                                       const ExtractionConfig& config,
                                       std::size_t& rejected) {
  std::vector<Crossing> out;
  const std::size_t n = run.size();
  const auto confirm = static_cast<std::size_t>(std::max(config.confirm_frames, 0));
  int current = run[0].lane;
  std::size_t i = 1;
  while (i < n) {
    const int lane = run[i].lane;
    if (lane == current) {
      ++i;
      continue;
    }
    // Lane ids flicker near marks; only a change that persists counts.
    bool persistent = true;
    for (std::size_t j = i; j < std::min(n, i + confirm); ++j) {
      if (run[j].lane != lane) persistent = false;
    }
    if (!persistent) {
      ++i;
      continue;
    }
    if (std::abs(lane - current) != 1 || !config.geometry.has_lane(lane) ||
        !config.geometry.has_lane(current)) {
      ++rejected;
      current = lane;
      ++i;
      continue;
    }
    const double mark = config.geometry.boundary(current, lane);
    const bool moving_right = lane > current;
    auto on_new_side = [&](double x) { return moving_right ? x >= mark : x < mark; };
    const std::size_t lo = std::max<std::size_t>(1, i > confirm ? i - confirm : 1);
    const std::size_t hi = std::min(n - 1, i + confirm);
    std::optional<std::size_t> hit;
    for (std::size_t g = lo; g <= hi; ++g) {
      if (!on_new_side(run[g - 1].x) && on_new_side(run[g].x)) {
        hit = g;
        break;
      }
    }
    if (hit) {
      out.push_back({*hit, current, lane});
    } else {
      ++rejected;
    }
    current = lane;
    i = std::max(i, hit.value_or(i)) + 1;
  }
  return out;
}

std::vector<SceneFrame> build_scenes(std::span<const TrajectoryRecord> run, std::size_t begin,
                                     std::size_t end, int lane, const FrameIndex& index,
                                     const ExtractionConfig& config) {
  std::vector<SceneFrame> scenes;
  scenes.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    const auto& r = run[k];
    scenes.push_back(scene::build_scene(index.at(r.frame_id), r.vehicle_id, config.geometry,
                                        config.scene, lane,
                                        static_cast<double>(r.frame_id) / config.frame_rate,
                                        r.frame_id));
  }
  return scenes;
}

void process_run(std::span<const TrajectoryRecord> run, const FrameIndex& index,
                 const ExtractionConfig& config, std::vector<PendingEpisode>& lane_changes,
                 std::vector<PendingEpisode>& lane_keeps, std::size_t& rejected) {
  const auto crossings = detect_crossings(run, config, rejected);
  const std::size_t window = config.window_frames;

  std::size_t segment_start = 0;
  int segment_lane = run[0].lane;
  auto add_lane_keep = [&](std::size_t begin, std::size_t end, int lane) {
    if (end <= begin || end - begin < config.lane_keep_min_frames || window == 0) return;
    if (!config.geometry.has_lane(lane)) return;
    const std::size_t start = begin + (end - begin - window) / 2;
    const auto scenes = build_scenes(run, start, start + window, lane, index, config);
    PendingEpisode ep;
    ep.frames = scene::label_episode(scenes, scene::LaneKeepEvent{}, config.scene);
    ep.info.vehicle_id = run[0].vehicle_id;
    ep.info.lane_change = false;
    ep.info.label = ep.frames.back().label;
    ep.info.samples = ep.frames.size();
    ep.first_frame = run[start].frame_id;
    lane_keeps.push_back(std::move(ep));
  };

  for (const auto& c : crossings) {
    const std::size_t begin = std::max(segment_start, c.index >= window ? c.index - window : 0);
    if (begin < c.index) {
      const auto scenes = build_scenes(run, begin, c.index, c.from, index, config);
      const auto& r = run[c.index];
      scene::LaneChangeEvent event;
      event.direction = c.to < c.from ? Direction::left : Direction::right;
      event.crossing_scene = scene::build_scene(
          index.at(r.frame_id), r.vehicle_id, config.geometry, config.scene, c.from,
          static_cast<double>(r.frame_id) / config.frame_rate, r.frame_id);
      PendingEpisode ep;
      ep.frames = scene::label_episode(scenes, event, config.scene);
      if (!ep.frames.empty()) {
        ep.info.vehicle_id = r.vehicle_id;
        ep.info.lane_change = true;
        ep.info.direction = event.direction;
        ep.info.crossing_frame = r.frame_id;
        ep.info.label = scene::crossing_label(*event.crossing_scene, event.direction);
        ep.info.samples = ep.frames.size();
        ep.first_frame = ep.frames.front().frame_id;
        lane_changes.push_back(std::move(ep));
      }
    }
    add_lane_keep(segment_start, begin, segment_lane);
    segment_start = c.index;
    segment_lane = c.to;
  }
  add_lane_keep(segment_start, run.size(), segment_lane);
}

}  // namespace

ExtractionReport extract_episodes(std::span<const TrajectoryRecord> records,
                                  const ExtractionConfig& config) {
  if (config.frame_rate <= 0.0) throw InputError("frame rate must be positive");
  std::vector<TrajectoryRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame_id < b.frame_id;
  });
  const FrameIndex index(sorted);

  ExtractionReport report;
  std::vector<PendingEpisode> lane_changes;
  std::vector<PendingEpisode> lane_keeps;

  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].vehicle_id == sorted[i].vehicle_id) ++j;
    if (j - i < 2) {
      ++report.skipped_vehicles;
      i = j;
      continue;
    }
    // Split the track at frame gaps; each contiguous run is handled alone.
    std::size_t run_start = i;
    for (std::size_t k = i + 1; k <= j; ++k) {
      if (k == j || sorted[k].frame_id != sorted[k - 1].frame_id + 1) {
        if (k - run_start >= 2) {
          process_run(std::span(sorted).subspan(run_start, k - run_start), index, config,
                      lane_changes, lane_keeps, report.rejected_crossings);
        }
        run_start = k;
      }
    }
    i = j;
  }

  std::size_t lc_samples = 0;
  for (const auto& ep : lane_changes) lc_samples += ep.frames.size();
  std::size_t lk_samples = 0;
  for (const auto& ep : lane_keeps) lk_samples += ep.frames.size();

  std::vector<PendingEpisode> kept_keeps;
  const double cap = config.lane_keep_ratio_cap * static_cast<double>(lc_samples);
  if (config.lane_keep_ratio_cap > 0.0 && lc_samples > 0 && static_cast<double>(lk_samples) > cap &&
      !lane_keeps.empty()) {
    // Evenly spaced subset in (vehicle, frame) order.
    const std::size_t per_episode = std::max<std::size_t>(config.window_frames, 1);
    const auto keep = static_cast<std::size_t>(std::floor(cap / static_cast<double>(per_episode)));
    const std::size_t total = lane_keeps.size();
    for (std::size_t k = 0; k < keep; ++k) {
      kept_keeps.push_back(std::move(lane_keeps[k * total / keep]));
    }
    report.dropped_lane_keep = total - keep;
  } else {
    kept_keeps = std::move(lane_keeps);
  }

  std::vector<PendingEpisode> all = std::move(lane_changes);
  for (auto& ep : kept_keeps) all.push_back(std::move(ep));
  std::stable_sort(all.begin(), all.end(), [](const PendingEpisode& a, const PendingEpisode& b) {
    return a.info.vehicle_id != b.info.vehicle_id ? a.info.vehicle_id < b.info.vehicle_id
                                                  : a.first_frame < b.first_frame;
  });

  std::int64_t next_id = 0;
  for (auto& ep : all) {
    ep.info.episode_id = next_id++;
    for (const auto& f : ep.frames) {
      report.dataset.samples.push_back(
          {f.features, f.label, ep.info.episode_id, ep.info.vehicle_id, f.frame_id});
    }
    report.episodes.push_back(ep.info);
  }
  return report;
}

}  // namespace simp::data
