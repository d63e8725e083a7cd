#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "simp/dataset.hpp"
#include "simp/episodes.hpp"
#include "simp/error.hpp"
#include "simp/synth.hpp"
#include "simp/trajectory.hpp"

using namespace simp;
using namespace simp::data;

namespace {

const std::string kHeader = "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,Lane_ID\n";

// Vehicle drifting left 0.1 ft per frame; its centre crosses the lane-1/lane-2
// mark between frames `cross - 1` and `cross`.
std::vector<TrajectoryRecord> drifting_vehicle(std::int64_t id, std::int64_t frames, std::int64_t cross) {
  std::vector<TrajectoryRecord> out;
  for (std::int64_t k = 0; k < frames; ++k) {
    TrajectoryRecord r;
    r.vehicle_id = id;
    r.frame_id = k;
    r.x = 12.0 - 0.1 * static_cast<double>(k - cross) - 0.05;
    r.y = 5.0 * static_cast<double>(k);
    r.v = 50.0;
    r.lane = r.x < 12.0 ? 1 : 2;
    out.push_back(r);
  }
  return out;
}

std::vector<TrajectoryRecord> straight_vehicle(std::int64_t id, std::int64_t frames, int lane,
                                               double y0 = 0.0) {
  std::vector<TrajectoryRecord> out;
  for (std::int64_t k = 0; k < frames; ++k)
    out.push_back({id, k, (lane - 0.5) * 12.0, y0 + 5.0 * static_cast<double>(k), 50.0, lane});
  return out;
}

ExtractionConfig three_lanes() {
  ExtractionConfig c;
  c.geometry = {12.0, 3};
  return c;
}

Dataset toy_dataset(std::size_t episodes, std::size_t per_episode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 30.0);
  Dataset d;
  for (std::size_t e = 0; e < episodes; ++e) {
    for (std::size_t k = 0; k < per_episode; ++k) {
      Sample s;
      for (double& f : s.features) f = n(rng);
      s.label = {static_cast<int>(e % 5) + 1, std::abs(n(rng)), 0.1 * static_cast<double>(k % 41)};
      if (s.label.area == 5) s.label.y_t = 4.0;
      s.episode_id = static_cast<std::int64_t>(e);
      s.vehicle_id = static_cast<std::int64_t>(100 + e);
      s.frame_id = static_cast<std::int64_t>(k);
      d.samples.push_back(s);
    }
  }
  return d;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("simp_test_data_io_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("parse_trajectory_csv: header only gives no records") {
  const auto r = parse_trajectory_csv(kHeader);
  CHECK(r.records.empty());
  CHECK(r.malformed_rows == 0);
}

TEST_CASE("parse_trajectory_csv: three hand-written rows") {
  const auto r = parse_trajectory_csv(kHeader +
                                      "1,10,6.5,100.25,44.0,1\n"
                                      "1,11,6.6,104.75,45.5,1\n"
                                      "2,10,18.0,50.0,30.0,2\n");
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0] == TrajectoryRecord{1, 10, 6.5, 100.25, 44.0, 1});
  CHECK(r.records[1] == TrajectoryRecord{1, 11, 6.6, 104.75, 45.5, 1});
  CHECK(r.records[2] == TrajectoryRecord{2, 10, 18.0, 50.0, 30.0, 2});
  CHECK(r.rows_read == 3);
}

TEST_CASE("parse_trajectory_csv: shuffled rows come back sorted by vehicle then frame") {
  std::vector<TrajectoryRecord> recs;
  for (int v = 1; v <= 4; ++v)
    for (int f = 0; f < 6; ++f) recs.push_back({v, f, 1.0 * v, 2.0 * f, 40.0, 1});
  auto shuffled = recs;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
  const auto r = parse_trajectory_csv(trajectory_csv(shuffled));
  CHECK(r.records == recs);
}

TEST_CASE("parse_trajectory_csv: schema and row problems") {
  CHECK_THROWS_AS(parse_trajectory_csv("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n1,1,1,1,1\n"),
                  DataError);
  const auto r = parse_trajectory_csv(kHeader + "1,1,1,1,1,1\nx,2,1,1,1,1\n1,3,1,1\n1,1,1,1,1,1\n");
  CHECK(r.records.size() == 1);
  CHECK(r.malformed_rows == 2);
  CHECK(r.duplicate_rows == 1);
}

TEST_CASE("parse_trajectory_csv: custom column names and extra columns") {
  ColumnMap cols;
  cols.vehicle_id = "id";
  cols.frame_id = "t";
  const auto r = parse_trajectory_csv("junk,id,t,Local_X,Local_Y,v_Vel,Lane_ID\nq,7,3,1.5,2.5,3.5,2\n", cols);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0] == TrajectoryRecord{7, 3, 1.5, 2.5, 3.5, 2});
}

TEST_CASE("ingest_csv: file round trip") {
  const auto dir = temp_dir("ingest");
  const auto recs = drifting_vehicle(5, 30, 15);
  write_trajectory_csv(dir / "t.csv", recs);
  CHECK(ingest_csv(dir / "t.csv").records == recs);
  CHECK_THROWS(ingest_csv(dir / "missing.csv"));
}

TEST_CASE("extract_episodes: a constant-lane vehicle yields lane-keep samples only") {
  const auto recs = straight_vehicle(1, 100, 2);
  const auto r = extract_episodes(recs, three_lanes());
  REQUIRE_FALSE(r.dataset.samples.empty());
  CHECK(r.dataset.samples.size() == 40);
  for (const auto& s : r.dataset.samples) {
    CHECK(s.label.area == 5);
    CHECK(s.label.y_t == 4.0);
  }
  CHECK(r.dataset.samples.front().frame_id == 30);
}

TEST_CASE("extract_episodes: crossing at frame 60 gives frames 20..59 with TTLC 4.0..0.1") {
  const auto r = extract_episodes(drifting_vehicle(1, 100, 60), three_lanes());
  REQUIRE(r.episodes.size() == 1);
  CHECK(r.episodes[0].lane_change);
  CHECK(r.episodes[0].crossing_frame == 60);
  const auto& s = r.dataset.samples;
  REQUIRE(s.size() == 40);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].frame_id == static_cast<std::int64_t>(20 + i));
    CHECK(s[i].label.y_t == doctest::Approx(4.0 - 0.1 * static_cast<double>(i)).epsilon(1e-12));
    CHECK(s[i].label.area <= 2);
  }
}

TEST_CASE("extract_episodes: two lane changes give two episodes") {
  auto recs = drifting_vehicle(1, 60, 50);  // lane 2 -> 1 at frame 50
  for (std::int64_t k = 60; k < 140; ++k) {
    TrajectoryRecord r{1, k, 0, 5.0 * static_cast<double>(k), 50.0, 1};
    r.x = 6.0 + 0.15 * static_cast<double>(k - 60);  // back to lane 2 at frame 100
    r.lane = r.x < 12.0 ? 1 : 2;
    recs.push_back(r);
  }
  const auto r = extract_episodes(recs, three_lanes());
  REQUIRE(r.episodes.size() == 2);
  CHECK(r.episodes[0].crossing_frame == 50);
  CHECK(r.episodes[0].direction == scene::Direction::left);
  CHECK(r.episodes[1].crossing_frame == 100);
  CHECK(r.episodes[1].direction == scene::Direction::right);
  // The second window cannot reach back past the first crossing.
  std::set<std::int64_t> seen;
  for (const auto& s : r.dataset.samples) {
    CHECK(seen.insert(s.frame_id).second);
    if (s.episode_id == r.episodes[1].episode_id) CHECK(s.frame_id >= 60);
  }
}

TEST_CASE("extract_episodes: a flickering lane id is not a lane change") {
  auto recs = straight_vehicle(1, 100, 2);
  recs[40].lane = 1;
  const auto r = extract_episodes(recs, three_lanes());
  for (const auto& e : r.episodes) CHECK_FALSE(e.lane_change);
}

TEST_CASE("extract_episodes: insertion area from the target-lane reference") {
  auto recs = drifting_vehicle(1, 100, 60);
  // Left-lane neighbour 30 ft ahead of the subject at the crossing frame.
  for (std::int64_t k = 0; k < 100; ++k) recs.push_back({2, k, 6.0, 5.0 * static_cast<double>(k) + 30.0, 50.0, 1});
  const auto r = extract_episodes(recs, three_lanes());
  const auto it = std::find_if(r.episodes.begin(), r.episodes.end(), [](const auto& e) { return e.lane_change; });
  REQUIRE(it != r.episodes.end());
  CHECK(it->label.area == 2);
  CHECK(it->label.y_s == doctest::Approx(30.0));
}

TEST_CASE("split_dataset: sizes, determinism and no leakage") {
  const auto d = toy_dataset(10, 7, 1);
  const auto [train, test] = split_dataset(d, 0.8, 42);
  CHECK(train.episode_ids().size() == 8);
  CHECK(test.episode_ids().size() == 2);
  CHECK(train.samples.size() + test.samples.size() == d.samples.size());
  const auto again = split_dataset(d, 0.8, 42);
  CHECK(again.first == train);
  CHECK(again.second == test);
  CHECK_THROWS_AS(split_dataset(toy_dataset(1, 3, 1), 0.8, 1), DataError);
  CHECK_THROWS_AS(split_dataset(d, 1.0, 1), DataError);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto corpus = toy_dataset(3 + seed % 40, 1 + seed % 5, seed);
    const auto [a, b] = split_dataset(corpus, 0.8, seed);
    const auto ia = a.episode_ids();
    const auto ib = b.episode_ids();
    std::vector<std::int64_t> both;
    std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(both));
    CHECK(both.empty());
    CHECK(ia.size() + ib.size() == corpus.episode_ids().size());
  }
}

TEST_CASE("dataset files round-trip byte-identically") {
  auto d = toy_dataset(6, 5, 9);
  d.samples[0].features[3] = 0.1 + 0.2;  // needs all 17 digits
  d.samples[1].features[4] = -1e-300;
  d.header.normalization = Normalization{std::vector<double>(25, 1.0 / 3.0), std::vector<double>(25, 2.5)};
  const auto csv = features_csv(d);
  const auto meta = meta_json(d);
  const auto back = parse_dataset(csv, meta);
  CHECK(back == d);
  CHECK(features_csv(back) == csv);
  CHECK(meta_json(back) == meta);

  const auto dir = temp_dir("dataset");
  save_dataset(d, dir / "ds");
  CHECK(std::filesystem::exists(features_path(dir / "ds")));
  CHECK(std::filesystem::exists(meta_path(dir / "ds")));
  CHECK(load_dataset(dir / "ds") == d);
}

TEST_CASE("parse_dataset: schema errors") {
  const auto d = toy_dataset(2, 2, 1);
  auto meta = nlohmann::json::parse(meta_json(d));
  meta["feature_ordering_hash"] = "0000000000000000";
  CHECK_THROWS_AS(parse_dataset(features_csv(d), meta.dump()), DataError);
  auto csv = features_csv(d);
  csv.replace(csv.find("v_pred"), 6, "v_prex");
  CHECK_THROWS_AS(parse_dataset(csv, meta_json(d)), DataError);
}

TEST_CASE("generate_synthetic: determinism and basic shape") {
  SynthConfig cfg;
  cfg.episodes = 12;
  cfg.seed = 5;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  CHECK(a.records == b.records);
  CHECK(trajectory_csv(a.records) == trajectory_csv(b.records));
  CHECK(truth_json(a.truth) == truth_json(b.truth));
  CHECK(a.truth.size() == 12);
  CHECK(std::is_sorted(a.records.begin(), a.records.end(), [](const auto& x, const auto& y) {
    return x.vehicle_id != y.vehicle_id ? x.vehicle_id < y.vehicle_id : x.frame_id < y.frame_id;
  }));
  cfg.seed = 6;
  CHECK(generate_synthetic(cfg).records != a.records);

  const auto round = truth_from_json(truth_json(a.truth));
  REQUIRE(round.size() == a.truth.size());
  for (std::size_t i = 0; i < round.size(); ++i) {
    CHECK(round[i].crossing_frame == a.truth[i].crossing_frame);
    CHECK(round[i].area == a.truth[i].area);
  }
}

TEST_CASE("generate_synthetic: zero lane-change probability keeps every lane") {
  SynthConfig cfg;
  cfg.episodes = 20;
  cfg.lane_change_probability = 0.0;
  const auto corpus = generate_synthetic(cfg);
  std::map<std::int64_t, int> lane;
  for (const auto& r : corpus.records) {
    const auto [it, fresh] = lane.emplace(r.vehicle_id, r.lane);
    CHECK(it->second == r.lane);
  }
  for (const auto& t : corpus.truth) CHECK_FALSE(t.lane_change);
  const auto extracted = extract_episodes(corpus.records, [&] {
    ExtractionConfig c;
    c.geometry = cfg.geometry();
    return c;
  }());
  CHECK(extracted.dataset.lane_change_samples() == 0);
}

TEST_CASE("generate_synthetic: invalid configurations are rejected") {
  SynthConfig cfg;
  cfg.gap_min = 200.0;
  CHECK_THROWS(generate_synthetic(cfg));
  cfg = {};
  cfg.lane_change_probability = 1.5;
  CHECK_THROWS(generate_synthetic(cfg));
}

TEST_CASE("generate_synthetic: extraction recovers the scripted area and crossing") {
  SynthConfig cfg;
  cfg.episodes = 150;
  cfg.seed = 11;
  const auto corpus = generate_synthetic(cfg);
  ExtractionConfig ec;
  ec.geometry = cfg.geometry();
  const auto report = extract_episodes(corpus.records, ec);

  std::size_t scripted = 0, recovered = 0;
  std::set<int> areas_seen;
  for (const auto& t : corpus.truth) {
    if (!t.lane_change) continue;
    ++scripted;
    areas_seen.insert(t.area);
    for (const auto& e : report.episodes) {
      if (e.lane_change && e.vehicle_id == t.vehicle_id && e.label.area == t.area &&
          std::llabs(e.crossing_frame - t.crossing_frame) <= 1) {
        ++recovered;
        CHECK(e.label.y_s == doctest::Approx(t.y_s).epsilon(0.05));
        break;
      }
    }
  }
  REQUIRE(scripted > 50);
  CHECK(static_cast<double>(recovered) >= 0.99 * static_cast<double>(scripted));
  CHECK(areas_seen == std::set<int>{1, 2, 3, 4});

  std::set<scene::Intention> coarse;
  for (const auto& s : report.dataset.samples) coarse.insert(scene::merge_intentions(s.label.area));
  CHECK(coarse.size() == 3);
}
