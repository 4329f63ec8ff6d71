#pragma once

#include <array>
#include <optional>
#include <vector>

#include "crowdnav/constants.hpp"
#include "crowdnav/dataset.hpp"
#include "crowdnav/geometry.hpp"

namespace crowdnav {

// 360 range readings, beam i cast at exactly i degrees in the world frame
// (bin 0 = +x axis). Beams that hit nothing read max_range.
struct LidarScan {
    std::array<double, kBeams> ranges{};
    double max_range = 30.0;
};

struct SceneAgent {
    int id = 0;
    Vec2 pos;
};

// What a scan can hit: the static map plus the other agents modeled as
// circles. excluded_id is the agent the robot replaced; it never appears
// in the circle set.
struct SceneSnapshot {
    const ObstacleMap* map = nullptr;
    std::vector<SceneAgent> agents;
    double agent_radius = 0.2;
    int excluded_id = -1;
};

// Smallest nonnegative ray parameter at which the ray from `origin` at
// `angle_deg` meets the segment, if any. A ray collinear with the segment
// returns the nearest point of the overlap (0 when the origin lies inside).
std::optional<double> ray_segment_distance(Vec2 origin, double angle_deg, const Segment& seg);

// Smallest nonnegative root of the ray-circle quadratic, if any.
std::optional<double> ray_circle_distance(Vec2 origin, double angle_deg, Vec2 center, double radius);

// Casts all beams against the scene. Parallel over beams; beams are
// independent, so the result is identical to the serial reference for any
// thread count.
LidarScan simulate_scan(const SceneSnapshot& scene, Vec2 origin, double max_range);

namespace reference {
// Serial implementation kept for testing and benchmarking the parallel kernel.
LidarScan simulate_scan(const SceneSnapshot& scene, Vec2 origin, double max_range);
}  // namespace reference

}  // namespace crowdnav
