#include "simp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "simp/error.hpp"

namespace simp::data {
namespace {

using scene::Direction;

// Intelligent-driver-model constants (feet, seconds).
constexpr double kMaxAccel = 4.0;
constexpr double kComfortDecel = 6.0;
constexpr double kHardDecel = 25.0;
constexpr double kMinSpacing = 8.0;
constexpr double kHeadway = 1.0;
constexpr double kCarLength = 15.0;
constexpr double kLateralCorrelation = 1.0;  // seconds
constexpr double kRoadOrigin = 1000.0;       // longitudinal offset of each scenario (ft)
constexpr std::int64_t kIdsPerScenario = 1000;
constexpr std::int64_t kFramePadding = 50;

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (u * (u * 6.0 - 15.0) + 10.0);
}

double idm_accel(double v, double desired, std::optional<double> gap, double closing_speed) {
  double acc = 1.0 - std::pow(v / desired, 4.0);
  if (gap) {
    const double s_star = kMinSpacing + std::max(0.0, v * kHeadway + v * closing_speed /
                                                          (2.0 * std::sqrt(kMaxAccel * kComfortDecel)));
    const double ratio = s_star / std::max(*gap, 0.5);
    acc -= ratio * ratio;
  }
  return std::clamp(kMaxAccel * acc, -kHardDecel, kMaxAccel);
}

struct Car {
  std::int64_t id = 0;
  int lane = 1;  // lane used for car following
  double y = 0.0;
  double v = 0.0;
  double desired = 0.0;
  double static_offset = 0.0;
  double jitter = 0.0;
  double x = 0.0;
};

/// Cubic Hermite offset profile over tau in [0, 1]; duration converts the
/// start slope (ft/s) into tau units.
struct OffsetProfile {
  double start = 0.0;
  double start_rate = 0.0;
  double end = 0.0;
  double duration = 1.0;

  double value(double tau) const {
    tau = std::clamp(tau, 0.0, 1.0);
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    return (2 * t3 - 3 * t2 + 1) * start + (t3 - 2 * t2 + tau) * duration * start_rate +
           (-2 * t3 + 3 * t2) * end;
  }
  double rate(double tau) const {
    if (tau >= 1.0) return 0.0;
    tau = std::clamp(tau, 0.0, 1.0);
    const double t2 = tau * tau;
    return ((6 * t2 - 6 * tau) * start + (3 * t2 - 4 * tau + 1) * duration * start_rate +
            (-6 * t2 + 6 * tau) * end) /
           duration;
  }
};

struct SubjectScript {
  bool lane_change = false;
  Direction direction = Direction::left;
  int origin = 1;
  int target = 1;
  std::size_t crossing = 0;     // frame index of the first frame past the mark
  std::size_t preparation = 0;  // frame index where gap alignment begins
  double crossing_time = 0.0;
  double maneuver = 4.0;
  double insertion_fraction = 0.25;
  bool prefer_front = true;
  // Filled in when the gap is chosen.
  std::optional<std::size_t> reference;
  OffsetProfile offset;
};

class Scenario {
 public:
  Scenario(const SynthConfig& config, std::size_t index)
      : config_(config), index_(index), geometry_(config.geometry()) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffULL),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    rng_.seed(seq);
    dt_ = 1.0 / config.frame_rate;
    frames_ = static_cast<std::size_t>(std::llround(config.duration * config.frame_rate));
    frame_base_ = 1 + static_cast<std::int64_t>(index) *
                          (static_cast<std::int64_t>(frames_) + kFramePadding);
  }

  void run(SynthCorpus& out) {
    script_subject();
    place_traffic();
    std::vector<std::vector<TrajectoryRecord>> tracks(cars_.size());
    for (std::size_t f = 0; f < frames_; ++f) {
      if (f > 0) advance(f);
      if (script_.lane_change && f == script_.preparation) choose_gap();
      if (script_.lane_change && f >= script_.preparation && f <= script_.crossing &&
          script_.reference) {
        track_reference(f);
      }
      update_lateral(f);
      if (script_.lane_change && f == script_.crossing) {
        cars_[0].lane = script_.target;
        record_truth(f);
      }
      for (std::size_t i = 0; i < cars_.size(); ++i) {
        const auto& c = cars_[i];
        tracks[i].push_back({c.id, frame_base_ + static_cast<std::int64_t>(f), c.x, c.y, c.v,
                             geometry_.lane_at(c.x)});
      }
    }
    if (!truth_recorded_) {
      truth_.lane_change = false;
      truth_.origin_lane = script_.origin;
      truth_.target_lane = script_.origin;
    }
    std::vector<std::size_t> order(cars_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return cars_[a].id < cars_[b].id; });
    for (std::size_t i : order) {
      out.records.insert(out.records.end(), tracks[i].begin(), tracks[i].end());
    }
    out.truth.push_back(truth_);
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sd) { return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(rng_) : 0.0; }

  double lane_speed(int lane) const {
    const double middle = (static_cast<double>(config_.lane_count) + 1.0) / 2.0;
    return config_.speed_mean + (middle - static_cast<double>(lane)) * config_.lane_speed_step;
  }

  void script_subject() {
    const int lanes = config_.lane_count;
    script_.lane_change =
        lanes > 1 && std::bernoulli_distribution(config_.lane_change_probability)(rng_);
    if (script_.lane_change) {
      script_.direction = std::bernoulli_distribution(0.5)(rng_) ? Direction::left : Direction::right;
      // Origin lanes that have a neighbour on the chosen side.
      const int lo = script_.direction == Direction::left ? 2 : 1;
      const int hi = script_.direction == Direction::left ? lanes : lanes - 1;
      script_.origin = std::uniform_int_distribution<int>(lo, hi)(rng_);
      script_.target = script_.origin + (script_.direction == Direction::left ? -1 : 1);
      const auto [c_lo, c_hi] = crossing_range();
      script_.crossing = std::uniform_int_distribution<std::size_t>(c_lo, c_hi)(rng_);
      const double prep = uniform(config_.preparation_min, config_.preparation_max);
      script_.preparation =
          script_.crossing - static_cast<std::size_t>(std::llround(prep * config_.frame_rate));
      script_.crossing_time = (static_cast<double>(script_.crossing) - 0.5) * dt_;
      script_.maneuver = uniform(config_.maneuver_min, config_.maneuver_max);
      script_.insertion_fraction = uniform(config_.insertion_min, config_.insertion_max);
      script_.prefer_front = std::bernoulli_distribution(0.5)(rng_);
    } else {
      script_.origin = std::uniform_int_distribution<int>(1, lanes)(rng_);
      script_.target = script_.origin;
    }
  }

 public:
  std::pair<std::size_t, std::size_t> crossing_range() const {
    const auto prep_frames =
        static_cast<std::size_t>(std::ceil(config_.preparation_max * config_.frame_rate));
    const std::size_t lo = std::max<std::size_t>(scene::kWindowFrames + 1, prep_frames + 2);
    const std::size_t hi = frames_ > 10 ? frames_ - 10 : 0;
    return {lo, hi};
  }

 private:
  Car make_car(int lane, double y) {
    Car c;
    c.id = static_cast<std::int64_t>(index_ + 1) * kIdsPerScenario + static_cast<std::int64_t>(cars_.size());
    c.lane = lane;
    c.y = y;
    c.desired = std::max(20.0, lane_speed(lane) + normal(config_.speed_stddev));
    c.v = c.desired;
    c.static_offset = std::clamp(normal(config_.lateral_offset_stddev), -0.9, 0.9);
    c.jitter = normal(config_.lateral_noise);
    c.x = geometry_.center(lane) + c.static_offset + c.jitter;
    return c;
  }

  void place_traffic() {
    cars_.push_back(make_car(script_.origin, kRoadOrigin));
    cars_[0].desired = lane_speed(script_.origin);
    cars_[0].v = cars_[0].desired;
    for (int lane = 1; lane <= config_.lane_count; ++lane) {
      if (lane == script_.origin) {
        for (double y = kRoadOrigin + uniform(config_.gap_min, config_.gap_max);
             y < kRoadOrigin + config_.span_ahead; y += uniform(config_.gap_min, config_.gap_max)) {
          cars_.push_back(make_car(lane, y));
        }
        for (double y = kRoadOrigin - uniform(config_.gap_min, config_.gap_max);
             y > kRoadOrigin - config_.span_behind; y -= uniform(config_.gap_min, config_.gap_max)) {
          cars_.push_back(make_car(lane, y));
        }
      } else {
        for (double y = kRoadOrigin - config_.span_behind + uniform(0.0, config_.gap_max);
             y < kRoadOrigin + config_.span_ahead; y += uniform(config_.gap_min, config_.gap_max)) {
          cars_.push_back(make_car(lane, y));
        }
      }
    }
  }

  bool subject_scripted(std::size_t f) const {
    return script_.lane_change && script_.reference && f >= script_.preparation &&
           f <= script_.crossing;
  }

  void advance(std::size_t f) {
    const std::vector<Car> prev = cars_;
    for (std::size_t i = 0; i < cars_.size(); ++i) {
      if (i == 0 && subject_scripted(f)) continue;
      Car& c = cars_[i];
      std::optional<std::size_t> leader;
      for (std::size_t j = 0; j < prev.size(); ++j) {
        if (j == i || prev[j].lane != c.lane || prev[j].y <= prev[i].y) continue;
        // Before the crossing the subject is invisible to its target lane.
        if (j == 0 && script_.lane_change && f <= script_.crossing && c.lane != script_.origin) continue;
        if (!leader || prev[j].y < prev[*leader].y) leader = j;
      }
      std::optional<double> gap;
      double closing = 0.0;
      if (leader) {
        gap = prev[*leader].y - prev[i].y - kCarLength;
        closing = prev[i].v - prev[*leader].v;
      }
      const double acc = idm_accel(prev[i].v, c.desired, gap, closing) + normal(config_.accel_noise);
      c.v = std::max(0.0, prev[i].v + acc * dt_);
      c.y = prev[i].y + c.v * dt_;
    }
  }

  void choose_gap() {
    Car& subject = cars_[0];
    std::vector<std::size_t> lane_cars;
    for (std::size_t i = 1; i < cars_.size(); ++i) {
      if (cars_[i].lane == script_.target) lane_cars.push_back(i);
    }
    std::sort(lane_cars.begin(), lane_cars.end(),
              [&](std::size_t a, std::size_t b) { return cars_[a].y < cars_[b].y; });
    const double horizon = script_.crossing_time - static_cast<double>(script_.preparation) * dt_;
    const double projected = subject.y + subject.v * horizon;
    const double open_gap = 2.0 * config_.gap_max;

    for (bool front : {script_.prefer_front, !script_.prefer_front}) {
      std::optional<std::size_t> best;
      double best_cost = std::numeric_limits<double>::infinity();
      double best_offset = 0.0;
      for (std::size_t k = 0; k < lane_cars.size(); ++k) {
        const Car& ref = cars_[lane_cars[k]];
        double gap = open_gap;
        if (front && k + 1 < lane_cars.size()) gap = cars_[lane_cars[k + 1]].y - ref.y;
        if (!front && k > 0) gap = ref.y - cars_[lane_cars[k - 1]].y;
        if (gap < config_.min_accepted_gap) continue;
        gap = std::min(gap, open_gap);
        const double offset = (front ? 1.0 : -1.0) * script_.insertion_fraction * gap;
        const double cost = std::abs(ref.y + ref.v * horizon + offset - projected);
        if (cost < best_cost) {
          best_cost = cost;
          best = lane_cars[k];
          best_offset = offset;
        }
      }
      if (best) {
        script_.reference = best;
        const Car& ref = cars_[*best];
        script_.offset = {subject.y - ref.y, subject.v - ref.v, best_offset, horizon};
        return;
      }
    }
    // No acceptable gap: the subject keeps its lane.
    script_.lane_change = false;
  }

  void track_reference(std::size_t f) {
    const Car& ref = cars_[*script_.reference];
    const double t = static_cast<double>(f) * dt_;
    const double start = static_cast<double>(script_.preparation) * dt_;
    const double tau = (t - start) / script_.offset.duration;
    cars_[0].y = ref.y + script_.offset.value(tau);
    cars_[0].v = ref.v + script_.offset.rate(tau);
  }

  void update_lateral(std::size_t f) {
    const double phi = std::exp(-dt_ / kLateralCorrelation);
    const double innovation = std::sqrt(1.0 - phi * phi) * config_.lateral_noise;
    const double t = static_cast<double>(f) * dt_;
    for (std::size_t i = 0; i < cars_.size(); ++i) {
      Car& c = cars_[i];
      if (f > 0) c.jitter = phi * c.jitter + normal(innovation);
      if (i == 0 && script_.lane_change) {
        const double sign = script_.direction == Direction::left ? -1.0 : 1.0;
        const double move_start = script_.crossing_time - 0.5 * script_.maneuver;
        const double s = smoothstep((t - move_start) / script_.maneuver);
        const double prep_start = static_cast<double>(script_.preparation) * dt_;
        double drift = 0.0;
        if (t < script_.crossing_time && t >= prep_start) {
          // Ramps all the way to the crossing so lateral offset keeps growing.
          drift = config_.drift_max * (t - prep_start) / std::max(script_.crossing_time - prep_start, dt_);
        }
        // Perturbations fade to zero at the mark so the crossing time is exact.
        const double fade = std::abs(1.0 - 2.0 * s);
        c.x = geometry_.center(script_.origin) + sign * config_.lane_width * s +
              fade * (c.static_offset + sign * drift + c.jitter);
      } else {
        c.x = geometry_.center(c.lane) + c.static_offset + c.jitter;
      }
    }
  }

  void record_truth(std::size_t f) {
    const Car& subject = cars_[0];
    const Car& ref = cars_[*script_.reference];
    const double offset = subject.y - ref.y;
    truth_.lane_change = true;
    truth_.direction = script_.direction;
    truth_.origin_lane = script_.origin;
    truth_.target_lane = script_.target;
    truth_.crossing_frame = frame_base_ + static_cast<std::int64_t>(f);
    truth_.area = scene::insertion_area(script_.direction, offset >= 0.0);
    truth_.reference_id = ref.id;
    truth_.y_s = std::abs(offset);
    truth_recorded_ = true;
  }

  const SynthConfig& config_;
  std::size_t index_;
  scene::LaneGeometry geometry_;
  std::mt19937_64 rng_;
  double dt_ = 0.1;
  std::size_t frames_ = 0;
  std::int64_t frame_base_ = 0;
  std::vector<Car> cars_;
  SubjectScript script_;
  ScriptedEpisode truth_;
  bool truth_recorded_ = false;

 public:
  void init_truth() {
    truth_.scenario = index_;
    truth_.vehicle_id = static_cast<std::int64_t>(index_ + 1) * kIdsPerScenario;
  }
};

}  // namespace

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("synthetic config: ") + what);
  };
  require(episodes >= 1, "episodes must be >= 1");
  require(lane_count >= 1, "lane_count must be >= 1");
  require(lane_width > 0.0, "lane_width must be positive");
  require(frame_rate > 0.0, "frame_rate must be positive");
  require(gap_min > kCarLength && gap_min <= gap_max, "gap range must satisfy car length < min <= max");
  require(speed_mean > 0.0 && speed_stddev >= 0.0, "speed distribution invalid");
  require(lane_change_probability >= 0.0 && lane_change_probability <= 1.0,
          "lane_change_probability must lie in [0, 1]");
  require(maneuver_min > 0.0 && maneuver_min <= maneuver_max, "maneuver range invalid");
  require(preparation_min > 0.5 * maneuver_max && preparation_min <= preparation_max,
          "preparation must start before the lateral move");
  require(insertion_min > 0.0 && insertion_min <= insertion_max && insertion_max < 0.5,
          "insertion fractions must lie in (0, 0.5)");
  require(min_accepted_gap > 0.0, "min_accepted_gap must be positive");
  require(lateral_noise >= 0.0 && lateral_offset_stddev >= 0.0 && drift_max >= 0.0,
          "lateral parameters must be non-negative");
  require(span_ahead > 0.0 && span_behind > 0.0, "traffic span must be positive");
  const auto frames = static_cast<std::size_t>(std::llround(duration * frame_rate));
  const auto prep_frames = static_cast<std::size_t>(std::ceil(preparation_max * frame_rate));
  const std::size_t lo = std::max<std::size_t>(scene::kWindowFrames + 1, prep_frames + 2);
  require(frames > 10 && lo <= frames - 10, "duration too short for the preparation window");
}

SynthCorpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  for (std::size_t k = 0; k < config.episodes; ++k) {
    Scenario scenario(config, k);
    scenario.init_truth();
    scenario.run(corpus);
  }
  std::stable_sort(corpus.records.begin(), corpus.records.end(),
                   [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
                     return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id
                                                         : a.frame_id < b.frame_id;
                   });
  return corpus;
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"seed", c.seed},
       {"episodes", c.episodes},
       {"lane_count", c.lane_count},
       {"lane_width", c.lane_width},
       {"frame_rate", c.frame_rate},
       {"duration", c.duration},
       {"span_behind", c.span_behind},
       {"span_ahead", c.span_ahead},
       {"gap_min", c.gap_min},
       {"gap_max", c.gap_max},
       {"speed_mean", c.speed_mean},
       {"speed_stddev", c.speed_stddev},
       {"lane_speed_step", c.lane_speed_step},
       {"accel_noise", c.accel_noise},
       {"lane_change_probability", c.lane_change_probability},
       {"maneuver_min", c.maneuver_min},
       {"maneuver_max", c.maneuver_max},
       {"preparation_min", c.preparation_min},
       {"preparation_max", c.preparation_max},
       {"min_accepted_gap", c.min_accepted_gap},
       {"insertion_min", c.insertion_min},
       {"insertion_max", c.insertion_max},
       {"drift_max", c.drift_max},
       {"lateral_offset_stddev", c.lateral_offset_stddev},
       {"lateral_noise", c.lateral_noise}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  const SynthConfig d;
#define SIMP_READ(field) c.field = j.value(#field, d.field)
  SIMP_READ(seed);
  SIMP_READ(episodes);
  SIMP_READ(lane_count);
  SIMP_READ(lane_width);
  SIMP_READ(frame_rate);
  SIMP_READ(duration);
  SIMP_READ(span_behind);
  SIMP_READ(span_ahead);
  SIMP_READ(gap_min);
  SIMP_READ(gap_max);
  SIMP_READ(speed_mean);
  SIMP_READ(speed_stddev);
  SIMP_READ(lane_speed_step);
  SIMP_READ(accel_noise);
  SIMP_READ(lane_change_probability);
  SIMP_READ(maneuver_min);
  SIMP_READ(maneuver_max);
  SIMP_READ(preparation_min);
  SIMP_READ(preparation_max);
  SIMP_READ(min_accepted_gap);
  SIMP_READ(insertion_min);
  SIMP_READ(insertion_max);
  SIMP_READ(drift_max);
  SIMP_READ(lateral_offset_stddev);
  SIMP_READ(lateral_noise);
#undef SIMP_READ
}

nlohmann::json truth_json(const std::vector<ScriptedEpisode>& truth) {
  nlohmann::json episodes = nlohmann::json::array();
  for (const auto& t : truth) {
    episodes.push_back({{"scenario", t.scenario},
                        {"vehicle_id", t.vehicle_id},
                        {"lane_change", t.lane_change},
                        {"direction", t.direction == Direction::left ? "left" : "right"},
                        {"origin_lane", t.origin_lane},
                        {"target_lane", t.target_lane},
                        {"crossing_frame", t.crossing_frame},
                        {"area", t.area},
                        {"reference_id", t.reference_id},
                        {"y_s", t.y_s}});
  }
  return {{"format", "simp-synth-truth"}, {"format_version", 1}, {"episodes", std::move(episodes)}};
}

std::vector<ScriptedEpisode> truth_from_json(const nlohmann::json& doc) {
  std::vector<ScriptedEpisode> out;
  try {
    for (const auto& e : doc.at("episodes")) {
      ScriptedEpisode t;
      t.scenario = e.at("scenario").get<std::size_t>();
      t.vehicle_id = e.at("vehicle_id").get<std::int64_t>();
      t.lane_change = e.at("lane_change").get<bool>();
      t.direction = e.at("direction").get<std::string>() == "left" ? Direction::left : Direction::right;
      t.origin_lane = e.at("origin_lane").get<int>();
      t.target_lane = e.at("target_lane").get<int>();
      t.crossing_frame = e.at("crossing_frame").get<std::int64_t>();
      t.area = e.at("area").get<int>();
      t.reference_id = e.at("reference_id").get<std::int64_t>();
      t.y_s = e.at("y_s").get<double>();
      out.push_back(t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed truth document: ") + e.what());
  }
  return out;
}

}  // namespace simp::data
