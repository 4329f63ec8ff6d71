#include "crowdnav/sfm.hpp"

#include <cmath>

namespace crowdnav {

Vec2 sfm_acceleration(Vec2 pos, Vec2 vel, Vec2 target, const SceneSnapshot& scene,
                      const SfmParams& params) {
    const Vec2 to_target = target - pos;
    Vec2 acc = (unit_or_zero(to_target) * params.desired_speed - vel) / params.relaxation_time;

    const double r = scene.agent_radius;
    for (const auto& other : scene.agents) {
        if (other.id == scene.excluded_id) continue;
        const Vec2 away = pos - other.pos;
        const double d = away.norm();
        const Vec2 dir = d > 0.0 ? away / d : Vec2{1.0, 0.0};  // coincident: push along +x
        acc += dir * (params.agent_strength * std::exp((2.0 * r - d) / params.agent_range));
    }
    if (scene.map) {
        for (const auto& seg : scene.map->segments) {
            const Vec2 p = closest_point_on_segment(pos, seg);
            const Vec2 away = pos - p;
            const double d = away.norm();
            const Vec2 dir = d > 0.0 ? away / d : Vec2{1.0, 0.0};
            acc += dir * (params.obstacle_strength * std::exp((r - d) / params.obstacle_range));
        }
    }
    return acc;
}

std::pair<double, double> sfm_policy_step(Vec2 pos, Vec2 vel, Vec2 target,
                                          const SceneSnapshot& scene, const SfmParams& params,
                                          double dt, double target_radius) {
    if (distance(pos, target) <= target_radius) return {0.0, 0.0};
    const Vec2 acc = sfm_acceleration(pos, vel, target, scene, params);
    Vec2 next = vel + acc * dt;
    const double speed = next.norm();
    if (speed > params.max_speed) next = next * (params.max_speed / speed);
    return {heading_deg(next), next.norm()};
}

}  // namespace crowdnav
