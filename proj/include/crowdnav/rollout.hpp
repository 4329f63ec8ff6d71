#pragma once

#include <string>
#include <vector>

#include "crowdnav/dataset.hpp"
#include "crowdnav/policy.hpp"

namespace crowdnav {

struct RolloutConfig {
    int max_steps = 400;
    double target_radius = 0.5;       // reach test, meters
    double collision_distance = 0.4;  // two 0.2 m radii
    double max_speed = 2.5;           // clamp on commanded speed
    double lidar_max_range = 30.0;
    double agent_radius = 0.2;
};

struct RolloutResult {
    int human_id = 0;
    double dt = 0.4;
    std::vector<Vec2> robot_path;  // steps + 1 positions
    std::vector<Vec2> human_path;  // the replaced human's recorded path
    bool reached = false;
    int steps = 0;
    // Closest center distance to any live agent minus the collision
    // distance, floored at 0; +inf when no other agent was ever live.
    double min_proximity = 0.0;
    int collision_count = 0;  // entering-collision events, counted per agent
};

// Replaces the human with the robot: start at the human's first recorded
// position, target at their last. Other agents replay their recorded
// trajectories (interpolated) and are absent outside their recorded span.
// Each step feeds the policy the previous and current scans, moves the
// robot by speed*dt along the commanded heading (speed clamped), and stops
// on reaching the target radius or after max_steps.
RolloutResult rollout(Policy& policy, const TrajectoryDataset& ds, int human_id,
                      const RolloutConfig& cfg);

struct Scenario {
    int human_id = 0;
    Vec2 start;
    Vec2 target;
};

enum class SplitHalf { kTrain, kTest };

// One scenario per track with at least 2 samples.
std::vector<Scenario> make_scenarios(const TrajectoryDataset& ds);

// Convenience: split first, then enumerate the chosen half.
std::vector<Scenario> make_scenarios(const TrajectoryDataset& ds, SplitHalf half,
                                     double train_fraction, std::uint64_t seed);

// {human_id, dt, robot_path, human_path, reached, steps, min_proximity,
//  collision_count}
void save_trace_json(const RolloutResult& result, const std::string& path);

// Map segments as <line> elements plus exactly two <polyline> elements
// (robot, then human) and start/goal markers.
void save_trace_svg(const RolloutResult& result, const ObstacleMap& map, const std::string& path);

}  // namespace crowdnav
