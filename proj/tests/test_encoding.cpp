#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crowdnav/encoding.hpp"
#include "crowdnav/rng.hpp"
#include "testutil.hpp"

using namespace crowdnav;

TEST_CASE("encode_target analytic cases") {
    const TargetEncoding east = encode_target({0, 0}, {4, 0});
    CHECK(east.bin() == 0);
    CHECK(east.dist() == doctest::Approx(4.0));

    const TargetEncoding north = encode_target({0, 0}, {0, 2});
    CHECK(north.bin() == 90);
    CHECK(north.dist() == doctest::Approx(2.0));

    const TargetEncoding self = encode_target({1, 1}, {1, 1});
    CHECK(self.bin() == 0);
    CHECK(self.dist() == 0.0);

    int ones = 0;
    for (int i = 0; i < kBeams; ++i) ones += east.v[static_cast<std::size_t>(i)] == 1.0 ? 1 : 0;
    CHECK(ones == 1);
}

TEST_CASE("encode_state layout") {
    LidarScan prev, cur;
    prev.max_range = cur.max_range = 30.0;
    for (int i = 0; i < kBeams; ++i) {
        prev.ranges[static_cast<std::size_t>(i)] = 10.0;
        cur.ranges[static_cast<std::size_t>(i)] = 15.0 + i * 0.01;
    }
    const TargetEncoding tau = encode_target({0, 0}, {4, 0});
    const StateMatrix m = encode_state(prev, cur, tau);

    for (int i = 0; i < kBeams; ++i) {
        CHECK(m.at(i, 0) == doctest::Approx(10.0 / 30.0));
        CHECK(m.at(i, 1) == doctest::Approx((15.0 + i * 0.01) / 30.0));
    }
    // The target block is identical in both columns, distance in the last row.
    for (int i = 0; i < kTargetDim; ++i) CHECK(m.at(kBeams + i, 0) == m.at(kBeams + i, 1));
    CHECK(m.at(kStateRows - 1, 0) == doctest::Approx(4.0));
    CHECK(m.at(kStateRows - 1, 1) == doctest::Approx(4.0));

    const StateMatrix same = encode_state(cur, cur, tau);
    for (int i = 0; i < kBeams; ++i) CHECK(same.at(i, 0) == same.at(i, 1));
}

TEST_CASE("encode_state distinguishes distinct scans") {
    Rng rng(7);
    const StateMatrix a = testutil::random_state(rng);
    const StateMatrix b = testutil::random_state(rng);
    CHECK(a == a);
    CHECK(!(a == b));
}

TEST_CASE("gaussian_direction_label sigma zero is one-hot") {
    const DirectionDistribution d = gaussian_direction_label(45.0, 0.0);
    CHECK(d.p[45] == 1.0);
    CHECK(d.sum() == doctest::Approx(1.0));
}

TEST_CASE("gaussian_direction_label closed-form neighbor ratio") {
    const DirectionDistribution d = gaussian_direction_label(90.0, 5.0);
    CHECK(decode_direction(d) == 90.0);
    CHECK(d.p[89] / d.p[90] == doctest::Approx(std::exp(-1.0 / 50.0)).epsilon(1e-12));
    CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gaussian_direction_label wraps around the seam") {
    const DirectionDistribution d = gaussian_direction_label(359.6, 5.0);
    CHECK(decode_direction(d) == 0.0);  // rounds to 360 == bin 0
    CHECK(d.p[359] == doctest::Approx(d.p[1]).epsilon(1e-12));
    CHECK(d.p[358] == doctest::Approx(d.p[2]).epsilon(1e-12));
}

TEST_CASE("gaussian_direction_label is circularly symmetric about its peak") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double heading = rng.uniform(0.0, 360.0);
        const double sigma = rng.uniform(0.5, 40.0);
        const DirectionDistribution d = gaussian_direction_label(heading, sigma);
        const int peak = static_cast<int>(decode_direction(d));
        for (int k = 1; k < 180; ++k) {
            const auto hi = static_cast<std::size_t>((peak + k) % kBeams);
            const auto lo = static_cast<std::size_t>(((peak - k) % kBeams + kBeams) % kBeams);
            CHECK(d.p[hi] == doctest::Approx(d.p[lo]).epsilon(1e-12));
        }
    }
}

TEST_CASE("decode_direction argmax and tie-breaks") {
    DirectionDistribution onehot;
    onehot.p[137] = 1.0;
    CHECK(decode_direction(onehot) == 137.0);

    DirectionDistribution uniform;
    for (auto& v : uniform.p) v = 1.0 / kBeams;
    CHECK(decode_direction(uniform) == 0.0);

    CHECK(decode_direction(gaussian_direction_label(200.0, 5.0)) == 200.0);
}

TEST_CASE("label then decode recovers the rounded heading") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const double heading = rng.uniform(0.0, 360.0);
        const double sigma = trial % 5 == 0 ? 0.0 : rng.uniform(0.1, 60.0);
        const int expected = static_cast<int>(std::lround(heading)) % kBeams;
        CHECK(decode_direction(gaussian_direction_label(heading, sigma)) ==
              static_cast<double>(expected));
    }
}
