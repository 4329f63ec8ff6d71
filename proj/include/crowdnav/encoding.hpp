#pragma once

#include <vector>

#include "crowdnav/constants.hpp"
#include "crowdnav/geometry.hpp"
#include "crowdnav/lidar.hpp"

namespace crowdnav {

// 360-dim one-hot direction followed by a scalar distance in meters.
struct TargetEncoding {
    std::vector<double> v;  // size kTargetDim

    TargetEncoding() : v(kTargetDim, 0.0) {}
    int bin() const;
    double dist() const { return v[kTargetDim - 1]; }
};

// The network input: column 0 = previous scan ++ target, column 1 =
// current scan ++ target. Scan entries are divided by max_range so the
// conv stack sees O(1) inputs; the distance scalar stays in meters.
struct StateMatrix {
    static constexpr int kRows = kStateRows;
    static constexpr int kCols = 2;

    // Column-contiguous storage; each column doubles as a conv channel.
    std::array<std::vector<double>, 2> cols;

    StateMatrix() {
        cols[0].assign(kRows, 0.0);
        cols[1].assign(kRows, 0.0);
    }
    double at(int row, int col) const { return cols[col][row]; }
    bool operator==(const StateMatrix&) const = default;
};

// 360 nonnegative reals summing to 1.
struct DirectionDistribution {
    std::vector<double> p;

    DirectionDistribution() : p(kBeams, 0.0) {}
    double sum() const;
};

// Direction bin = round(atan2 degrees) mod 360, distance = Euclidean.
// Coincident positions encode bin 0 with distance 0.
TargetEncoding encode_target(Vec2 robot_pos, Vec2 target_pos);

StateMatrix encode_state(const LidarScan& scan_prev, const LidarScan& scan_cur,
                         const TargetEncoding& target);

// Wrapped Gaussian about round(heading): bin b gets weight
// exp(-w(b, c)^2 / (2 sigma^2)) with w the circular bin distance, then the
// vector is normalized. sigma = 0 yields a one-hot.
DirectionDistribution gaussian_direction_label(double heading_deg, double sigma_deg);

// Argmax bin as degrees; ties break toward the lowest index.
double decode_direction(const DirectionDistribution& dist);

}  // namespace crowdnav
