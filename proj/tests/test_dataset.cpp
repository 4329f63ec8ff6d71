#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "crowdnav/dataset.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/lidar.hpp"
#include "crowdnav/rng.hpp"
#include "testutil.hpp"

using namespace crowdnav;

namespace {

std::string write_file(const std::string& name, const std::string& content) {
    const auto path = testutil::tmp_dir("dataset") / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("import_obsmat groups rows into tracks") {
    // frame id px pz py vx vz vy; frame rate 2.5 -> dt 0.4
    const std::string path = write_file("ok.txt",
                                        "0 1 0.0 0 0.0 0 0 0\n"
                                        "1 1 0.4 0 0.0 0 0 0\n"
                                        "0 2 1.0 0 1.0 0 0 0\n"
                                        "1 2 1.0 0 1.4 0 0 0\n"
                                        "0 3 5.0 0 5.0 0 0 0\n"
                                        "1 3 5.4 0 5.0 0 0 0\n");
    const TrajectoryDataset ds = import_obsmat(path, 2.5);
    CHECK(ds.agents.size() == 3);
    CHECK(ds.agents[0].samples.size() == 2);
    CHECK(ds.agents[0].samples[1].t == doctest::Approx(0.4));
    CHECK(ds.agents[1].samples[1].pos.y == doctest::Approx(1.4));
}

TEST_CASE("import_obsmat error paths") {
    CHECK_THROWS_WITH_AS(import_obsmat(write_file("empty.txt", ""), 2.5),
                         doctest::Contains("no rows"), UserError);
    CHECK_THROWS_WITH_AS(import_obsmat(write_file("short.txt", "0 1 0 0\n"), 2.5),
                         doctest::Contains("line 1"), UserError);
    CHECK_THROWS_WITH_AS(import_obsmat(write_file("bad.txt", "0 1 x 0 0 0 0 0\n"), 2.5),
                         doctest::Contains("non-numeric"), UserError);
    CHECK_THROWS_AS(import_obsmat("/nonexistent/obsmat.txt", 2.5), UserError);
}

TEST_CASE("import_obsmat drops non-finite rows and sub-2-sample tracks") {
    const std::string path = write_file("nan.txt",
                                        "0 1 0.0 0 0.0 0 0 0\n"
                                        "1 1 nan 0 0.0 0 0 0\n"
                                        "2 1 0.8 0 0.0 0 0 0\n"
                                        "0 2 1.0 0 1.0 0 0 0\n");
    const TrajectoryDataset ds = import_obsmat(path, 2.5);
    REQUIRE(ds.agents.size() == 1);  // track 2 dropped (one sample)
    CHECK(ds.agents[0].samples.size() == 2);
}

TEST_CASE("resample_track interpolates onto the dt grid") {
    AgentTrack track{7, {{0.0, {0.0, 0.0}}, {0.8, {0.8, 0.0}}}};
    const AgentTrack r = resample_track(track, 0.4);
    REQUIRE(r.samples.size() == 3);
    CHECK(r.samples[1].t == doctest::Approx(0.4));
    CHECK(r.samples[1].pos.x == doctest::Approx(0.4));
    CHECK(r.samples[2].pos.x == doctest::Approx(0.8));
}

TEST_CASE("resample_track leaves an on-grid track unchanged") {
    AgentTrack track{7, {{0.0, {0.0, 0.0}}, {0.4, {1.0, 2.0}}, {0.8, {2.0, 4.0}}}};
    const AgentTrack r = resample_track(track, 0.4);
    REQUIRE(r.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.samples[i].t == doctest::Approx(track.samples[i].t));
        CHECK(r.samples[i].pos.x == doctest::Approx(track.samples[i].pos.x));
        CHECK(r.samples[i].pos.y == doctest::Approx(track.samples[i].pos.y));
    }
}

TEST_CASE("resample_track degenerate span and bad dt") {
    AgentTrack track{7, {{0.0, {0.0, 0.0}}, {0.3, {0.3, 0.0}}}};
    CHECK(resample_track(track, 0.4).samples.size() == 1);  // dropped downstream
    CHECK_THROWS_AS(resample_track(track, 0.0), UserError);
}

TEST_CASE("velocity_labels analytic cases") {
    AgentTrack track{1,
                     {{0.0, {0.0, 0.0}},
                      {0.4, {0.4, 0.0}},    // 1 m/s along +x
                      {0.8, {0.4, 0.4}},    // 1 m/s along +y
                      {1.2, {0.4, 0.4}}}};  // stationary
    const auto labels = velocity_labels(track, 0.4);
    REQUIRE(labels.size() == 3);
    CHECK(labels[0].speed == doctest::Approx(1.0));
    CHECK(labels[0].heading_deg == doctest::Approx(0.0));
    CHECK(labels[1].speed == doctest::Approx(1.0));
    CHECK(labels[1].heading_deg == doctest::Approx(90.0));
    CHECK(labels[2].speed == doctest::Approx(0.0));
    CHECK(labels[2].heading_deg == doctest::Approx(90.0));  // inherited
}

TEST_CASE("velocity_labels first zero step defaults to heading 0") {
    AgentTrack track{1, {{0.0, {1.0, 1.0}}, {0.4, {1.0, 1.0}}}};
    const auto labels = velocity_labels(track, 0.4);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].speed == 0.0);
    CHECK(labels[0].heading_deg == 0.0);
}

TEST_CASE("resample + labels conserve path length") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        AgentTrack track;
        track.id = trial;
        double t = 0.0;
        Vec2 pos{0.0, 0.0};
        for (int i = 0; i < 10; ++i) {
            track.samples.push_back({t, pos});
            t += rng.uniform(0.3, 1.0);
            pos += {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        }
        const AgentTrack r = resample_track(track, 0.4);
        if (r.samples.size() < 2) continue;
        double path_len = 0.0;
        for (std::size_t i = 1; i < r.samples.size(); ++i)
            path_len += distance(r.samples[i].pos, r.samples[i - 1].pos);
        double label_len = 0.0;
        for (const auto& lab : velocity_labels(r, 0.4)) label_len += lab.speed * 0.4;
        CHECK(label_len == doctest::Approx(path_len).epsilon(1e-9));
    }
}

TEST_CASE("split_train_test partitions deterministically") {
    const TrajectoryDataset ds = testutil::straight_line_dataset(9, 5, 1.0, 3);
    auto [train, test] = split_train_test(ds, 2.0 / 3.0, 42);
    CHECK(train.agents.size() == 6);
    CHECK(test.agents.size() == 3);

    auto [train2, test2] = split_train_test(ds, 2.0 / 3.0, 42);
    for (std::size_t i = 0; i < train.agents.size(); ++i)
        CHECK(train.agents[i].id == train2.agents[i].id);

    // Partition: union of ids equals the originals, intersection empty.
    std::set<int> seen;
    for (const auto& a : train.agents) CHECK(seen.insert(a.id).second);
    for (const auto& a : test.agents) CHECK(seen.insert(a.id).second);
    CHECK(seen.size() == ds.agents.size());
}

TEST_CASE("split_train_test boundary fraction keeps everything in train") {
    const TrajectoryDataset ds = testutil::straight_line_dataset(4, 5, 1.0, 3);
    auto [train, test] = split_train_test(ds, 1.0, 1);
    CHECK(train.agents.size() == 4);
    CHECK(test.agents.empty());
    CHECK_THROWS_AS(split_train_test(TrajectoryDataset{}, 0.5, 1), UserError);
}

TEST_CASE("augment_rotate identity and exact rotation") {
    const TrajectoryDataset ds = testutil::straight_line_dataset(3, 6, 1.0, 5);
    const auto none = augment_rotate(ds, 0, 9);
    REQUIRE(none.size() == 1);
    CHECK(none[0].agents.size() == ds.agents.size());

    // A 90 degree rotation about the bounds center maps center+(1,0) to
    // center+(0,1).
    const Vec2 c = ds.map.bounds.center();
    const Vec2 rotated = rotate_about(c + Vec2{1.0, 0.0}, c, 90.0);
    CHECK(rotated.x == doctest::Approx(c.x).epsilon(1e-12));
    CHECK(rotated.y == doctest::Approx(c.y + 1.0).epsilon(1e-12));
}

TEST_CASE("augment_rotate preserves simultaneous pairwise distances") {
    const TrajectoryDataset ds = testutil::straight_line_dataset(4, 8, 1.2, 21);
    const auto worlds = augment_rotate(ds, 2, 77);
    REQUIRE(worlds.size() == 3);
    for (std::size_t w = 1; w < worlds.size(); ++w) {
        for (int k = 0; k <= 8; ++k) {
            const double t = k * ds.dt;
            for (std::size_t i = 0; i < ds.agents.size(); ++i)
                for (std::size_t j = i + 1; j < ds.agents.size(); ++j) {
                    Vec2 a0, b0, a1, b1;
                    REQUIRE(ds.agents[i].position_at(t, &a0));
                    REQUIRE(ds.agents[j].position_at(t, &b0));
                    REQUIRE(worlds[w].agents[i].position_at(t, &a1));
                    REQUIRE(worlds[w].agents[j].position_at(t, &b1));
                    CHECK(distance(a1, b1) == doctest::Approx(distance(a0, b0)).epsilon(1e-9));
                }
        }
    }
}

TEST_CASE("augmented worlds scan as circular shifts of the original") {
    // Map with a couple of walls so the scans have structure.
    TrajectoryDataset ds = testutil::straight_line_dataset(3, 6, 1.0, 8);
    ds.map.segments.push_back({{-12.0, -12.0}, {12.0, -12.0}});
    ds.map.segments.push_back({{12.0, -12.0}, {12.0, 12.0}});
    recompute_bounds(ds);

    const std::uint64_t seed = 1234;
    const auto worlds = augment_rotate(ds, 2, seed);
    // Re-derive the replica angles the same way augment_rotate drew them.
    Rng rng(seed);
    std::vector<int> angles;
    for (int i = 0; i < 2; ++i) angles.push_back(rng.uniform_int(1, 359));

    Rng pick(99);
    const Vec2 center = ds.map.bounds.center();
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = 1 + static_cast<std::size_t>(pick.below(2));
        const int angle = angles[w - 1];
        const auto agent = static_cast<std::size_t>(pick.below(ds.agents.size()));
        const auto sample = static_cast<std::size_t>(pick.below(ds.agents[agent].samples.size()));
        const double t = ds.agents[agent].samples[sample].t;
        const Vec2 pose = ds.agents[agent].samples[sample].pos;

        SceneSnapshot orig{&ds.map, {}, 0.2, ds.agents[agent].id};
        for (const auto& a : ds.agents) {
            Vec2 p;
            if (a.id != orig.excluded_id && a.position_at(t, &p)) orig.agents.push_back({a.id, p});
        }
        SceneSnapshot rot{&worlds[w].map, {}, 0.2, ds.agents[agent].id};
        for (const auto& a : worlds[w].agents) {
            Vec2 p;
            if (a.id != rot.excluded_id && a.position_at(t, &p)) rot.agents.push_back({a.id, p});
        }
        const LidarScan s0 = simulate_scan(orig, pose, 30.0);
        const LidarScan s1 = simulate_scan(rot, rotate_about(pose, center, angle), 30.0);
        for (int b = 0; b < kBeams; ++b) {
            const int src = ((b - angle) % kBeams + kBeams) % kBeams;
            CHECK(s1.ranges[static_cast<std::size_t>(b)] ==
                  doctest::Approx(s0.ranges[static_cast<std::size_t>(src)]).epsilon(1e-6));
        }
    }
}

TEST_CASE("native dataset json round-trips exactly") {
    TrajectoryDataset ds = testutil::straight_line_dataset(3, 7, 1.3, 31);
    ds.map.segments.push_back({{-1.5, 0.25}, {2.5, 3.75}});
    recompute_bounds(ds);
    const auto path = (testutil::tmp_dir("dataset") / "roundtrip.json").string();
    save_dataset_json(ds, path);
    const TrajectoryDataset back = load_dataset_json(path);
    CHECK(back.dt == ds.dt);
    REQUIRE(back.agents.size() == ds.agents.size());
    REQUIRE(back.map.segments.size() == ds.map.segments.size());
    for (std::size_t i = 0; i < ds.agents.size(); ++i) {
        CHECK(back.agents[i].id == ds.agents[i].id);
        REQUIRE(back.agents[i].samples.size() == ds.agents[i].samples.size());
        for (std::size_t k = 0; k < ds.agents[i].samples.size(); ++k) {
            CHECK(back.agents[i].samples[k].t == ds.agents[i].samples[k].t);
            CHECK(back.agents[i].samples[k].pos == ds.agents[i].samples[k].pos);
        }
    }
}

TEST_CASE("map loader validates segments") {
    const std::string good = write_file("map.json", R"({"segments": [[0,0,1,0],[1,0,1,1]]})");
    const ObstacleMap map = load_map_json(good);
    CHECK(map.segments.size() == 2);
    const std::string zero = write_file("map0.json", R"({"segments": [[1,1,1,1]]})");
    CHECK_THROWS_WITH_AS(load_map_json(zero), doctest::Contains("zero-length"), UserError);
    CHECK_THROWS_WITH_AS(load_map_json("/missing/map.json"), doctest::Contains("map not found"),
                         UserError);
}

TEST_CASE("dataset loader rejects corrupt documents") {
    const std::string dup = write_file("dup.json",
        R"({"dt":0.4,"map":{"segments":[]},"agents":[)"
        R"({"id":1,"samples":[[0,0,0],[0.4,1,0]]},{"id":1,"samples":[[0,2,2],[0.4,3,2]]}]})");
    CHECK_THROWS_WITH_AS(load_dataset_json(dup), doctest::Contains("duplicate agent id"),
                         UserError);

    const std::string unsorted = write_file("unsorted.json",
        R"({"dt":0.4,"map":{"segments":[]},"agents":[{"id":1,"samples":[[0.4,0,0],[0,1,0]]}]})");
    CHECK_THROWS_WITH_AS(load_dataset_json(unsorted), doctest::Contains("strictly increase"),
                         UserError);

    const std::string zero_seg = write_file("zeroseg.json",
        R"({"dt":0.4,"map":{"segments":[[1,1,1,1]]},"agents":[]})");
    CHECK_THROWS_WITH_AS(load_dataset_json(zero_seg), doctest::Contains("zero-length"), UserError);
}
