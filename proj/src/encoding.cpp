#include "crowdnav/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "crowdnav/errors.hpp"

namespace crowdnav {

int TargetEncoding::bin() const {
    for (int i = 0; i < kBeams; ++i)
        if (v[static_cast<std::size_t>(i)] == 1.0) return i;
    return -1;
}

double DirectionDistribution::sum() const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
}

namespace {

// Nearest whole-degree bin; bin b covers [b - 0.5, b + 0.5).
int heading_to_bin(double heading_deg_value) {
    const int b = static_cast<int>(std::lround(heading_deg_value));
    return ((b % kBeams) + kBeams) % kBeams;
}

int circular_bin_distance(int a, int b) {
    const int d = std::abs(a - b) % kBeams;
    return std::min(d, kBeams - d);
}

}  // namespace

TargetEncoding encode_target(Vec2 robot_pos, Vec2 target_pos) {
    TargetEncoding enc;
    const Vec2 d = target_pos - robot_pos;
    const double dist = d.norm();
    const int bin = dist < 1e-9 ? 0 : heading_to_bin(heading_deg(d));
    enc.v[static_cast<std::size_t>(bin)] = 1.0;
    enc.v[kTargetDim - 1] = dist;
    return enc;
}

StateMatrix encode_state(const LidarScan& scan_prev, const LidarScan& scan_cur,
                         const TargetEncoding& target) {
    StateMatrix m;
    const double inv_prev = 1.0 / scan_prev.max_range;
    const double inv_cur = 1.0 / scan_cur.max_range;
    for (int i = 0; i < kBeams; ++i) {
        m.cols[0][static_cast<std::size_t>(i)] = scan_prev.ranges[static_cast<std::size_t>(i)] * inv_prev;
        m.cols[1][static_cast<std::size_t>(i)] = scan_cur.ranges[static_cast<std::size_t>(i)] * inv_cur;
    }
    for (int i = 0; i < kTargetDim; ++i) {
        m.cols[0][static_cast<std::size_t>(kBeams + i)] = target.v[static_cast<std::size_t>(i)];
        m.cols[1][static_cast<std::size_t>(kBeams + i)] = target.v[static_cast<std::size_t>(i)];
    }
    return m;
}

DirectionDistribution gaussian_direction_label(double heading_deg_value, double sigma_deg) {
    if (sigma_deg < 0.0) throw UserError("sigma must be >= 0");
    DirectionDistribution dist;
    const int center = heading_to_bin(heading_deg_value);
    if (sigma_deg == 0.0) {
        dist.p[static_cast<std::size_t>(center)] = 1.0;
        return dist;
    }
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma_deg * sigma_deg);
    double total = 0.0;
    for (int b = 0; b < kBeams; ++b) {
        const double w = static_cast<double>(circular_bin_distance(b, center));
        const double v = std::exp(-w * w * inv_two_sigma2);
        dist.p[static_cast<std::size_t>(b)] = v;
        total += v;
    }
    for (double& v : dist.p) v /= total;
    return dist;
}

double decode_direction(const DirectionDistribution& dist) {
    const auto it = std::max_element(dist.p.begin(), dist.p.end());
    return static_cast<double>(it - dist.p.begin());
}

}  // namespace crowdnav
