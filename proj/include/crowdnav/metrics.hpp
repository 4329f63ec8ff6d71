#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/rollout.hpp"

namespace crowdnav {

// Step-aligned sum of squared position differences; the shorter path is
// padded by repeating its final point.
double spd(std::span<const Vec2> path_a, std::span<const Vec2> path_b);

// Classic dynamic-programming DTW with Euclidean per-pair cost and moves
// {match, insert, delete}.
double dtw(std::span<const Vec2> path_a, std::span<const Vec2> path_b);

struct RolloutRow {
    int scenario_id = 0;  // the replaced human's id
    double spd = 0.0;
    double dtw = 0.0;
    double proximity = 0.0;
    int collisions = 0;
    bool reached = false;
    int steps = 0;
};

struct MetricsReport {
    double mean_spd = 0.0;
    double mean_dtw = 0.0;
    double mean_proximity = 0.0;  // over rollouts with a proximity reading
    double mean_collisions = 0.0;
    double target_rate = 0.0;  // fraction reaching the goal within max_steps
    std::vector<RolloutRow> rows;
};

// Builds a fresh policy per scenario, so stateful policies can run
// scenarios in parallel and the oracle can capture its human's labels.
using PolicyFactory =
    std::function<std::unique_ptr<Policy>(const Scenario&, const TrajectoryDataset&)>;

// Rolls out every scenario and aggregates the five Table-style metrics.
// Scenarios run in parallel (capped by CROWDNAV_THREADS) with results
// gathered in scenario order, so the report is deterministic.
MetricsReport evaluate(const PolicyFactory& make_policy, const TrajectoryDataset& ds,
                       std::span<const Scenario> scenarios, const RolloutConfig& cfg);

namespace reference {
// Serial evaluation kept for testing the parallel path.
MetricsReport evaluate(const PolicyFactory& make_policy, const TrajectoryDataset& ds,
                       std::span<const Scenario> scenarios, const RolloutConfig& cfg);
}  // namespace reference

// CSV columns: scenario_id,spd,dtw,proximity,collisions,reached,steps, one
// row per rollout plus a trailing "mean" summary row (its reached column
// holds the target rate).
void save_report_csv(const MetricsReport& report, const std::string& path);
void save_report_json(const MetricsReport& report, const std::string& path);

}  // namespace crowdnav
