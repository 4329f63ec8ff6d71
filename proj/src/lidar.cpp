#include "crowdnav/lidar.hpp"

#include <cmath>

#include "crowdnav/errors.hpp"

namespace crowdnav {

namespace {

constexpr double kParallelEps = 1e-12;

double beam_range(const SceneSnapshot& scene, Vec2 origin, double angle_deg, double max_range) {
    double best = max_range;
    if (scene.map) {
        for (const auto& seg : scene.map->segments) {
            if (auto d = ray_segment_distance(origin, angle_deg, seg); d && *d < best) best = *d;
        }
    }
    for (const auto& agent : scene.agents) {
        if (agent.id == scene.excluded_id) continue;
        if (auto d = ray_circle_distance(origin, angle_deg, agent.pos, scene.agent_radius);
            d && *d < best)
            best = *d;
    }
    return best;
}

}  // namespace

std::optional<double> ray_segment_distance(Vec2 origin, double angle_deg, const Segment& seg) {
    const Vec2 u = dir_from_deg(angle_deg);
    const Vec2 d = seg.b - seg.a;
    const Vec2 w = seg.a - origin;
    const double denom = cross(u, d);

    if (std::abs(denom) < kParallelEps) {
        // Parallel. Collinear overlap returns the nearest covered point.
        if (std::abs(cross(w, u)) > kParallelEps) return std::nullopt;
        const double ta = dot(w, u);
        const double tb = dot(seg.b - origin, u);
        const double t_near = std::min(ta, tb);
        const double t_far = std::max(ta, tb);
        if (t_far < 0.0) return std::nullopt;
        return std::max(0.0, t_near);
    }

    const double t = cross(w, d) / denom;
    const double s = cross(w, u) / denom;
    if (t < 0.0 || s < 0.0 || s > 1.0) return std::nullopt;
    return t;
}

std::optional<double> ray_circle_distance(Vec2 origin, double angle_deg, Vec2 center,
                                          double radius) {
    if (radius <= 0.0) throw UserError("circle radius must be positive");
    const Vec2 u = dir_from_deg(angle_deg);
    const Vec2 oc = origin - center;
    // |oc + t u|^2 = r^2 with |u| = 1.
    const double b = dot(u, oc);
    const double c = oc.norm2() - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t0 = -b - root;
    if (t0 >= 0.0) return t0;
    const double t1 = -b + root;
    if (t1 >= 0.0) return t1;
    return std::nullopt;
}

LidarScan simulate_scan(const SceneSnapshot& scene, Vec2 origin, double max_range) {
    if (max_range <= 0.0) throw UserError("lidar max range must be positive");
    LidarScan scan;
    scan.max_range = max_range;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < kBeams; ++i) {
        scan.ranges[static_cast<std::size_t>(i)] =
            beam_range(scene, origin, static_cast<double>(i), max_range);
    }
    return scan;
}

namespace reference {

LidarScan simulate_scan(const SceneSnapshot& scene, Vec2 origin, double max_range) {
    if (max_range <= 0.0) throw UserError("lidar max range must be positive");
    LidarScan scan;
    scan.max_range = max_range;
    for (int i = 0; i < kBeams; ++i) {
        scan.ranges[static_cast<std::size_t>(i)] =
            beam_range(scene, origin, static_cast<double>(i), max_range);
    }
    return scan;
}

}  // namespace reference

}  // namespace crowdnav
