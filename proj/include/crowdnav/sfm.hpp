#pragma once

#include "crowdnav/geometry.hpp"
#include "crowdnav/lidar.hpp"

namespace crowdnav {

// Helbing-style magnitudes; documented defaults, overridable from the
// run config.
struct SfmParams {
    double desired_speed = 1.3;    // m/s
    double relaxation_time = 0.5;  // s
    double agent_strength = 2.0;   // A_p, m/s^2
    double agent_range = 0.3;      // B_p, m
    double obstacle_strength = 2.0;  // A_o
    double obstacle_range = 0.2;     // B_o
    double max_speed = 2.5;          // m/s
};

// Drive term (desired_speed * unit(target - pos) - vel) / relaxation_time,
// plus exponential repulsions from every other agent and from the nearest
// point of each map segment. A coincident agent repels along +x.
Vec2 sfm_acceleration(Vec2 pos, Vec2 vel, Vec2 target, const SceneSnapshot& scene,
                      const SfmParams& params);

// Euler-integrates the velocity by one step, clamps its magnitude to
// max_speed and returns (heading degrees, speed). Inside the target-reach
// radius the commanded speed is 0.
std::pair<double, double> sfm_policy_step(Vec2 pos, Vec2 vel, Vec2 target,
                                          const SceneSnapshot& scene, const SfmParams& params,
                                          double dt, double target_radius = 0.5);

}  // namespace crowdnav
