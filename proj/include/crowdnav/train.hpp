#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/dataset.hpp"
#include "crowdnav/network.hpp"
#include "crowdnav/optimizer.hpp"

namespace crowdnav {

struct TrainingConfig {
    int epochs = 100;
    std::uint64_t seed = 1;
    double l2_weight = 0.001;
    double lidar_max_range = 30.0;
    double agent_radius = 0.2;
};

struct EpochLogRow {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_speed_loss = 0.0;
    double mean_direction_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    NamedTensors params;
    AdadeltaState optimizer;
    std::vector<EpochLogRow> log;
};

// The training sequence for one track: per labeled step, the state matrix
// built from the scans at the human's previous and current positions (the
// track's own agent excluded from the scene) and the step label. The
// previous scan at the first step duplicates the current one.
std::vector<SequenceItem> build_track_sequence(const TrajectoryDataset& ds,
                                               const AgentTrack& track,
                                               double lidar_max_range, double agent_radius);

// Truncated-BPTT training over every track of every world. Track order is
// reshuffled per epoch and dropout masks are drawn per window, all from
// `seed`; two runs with the same inputs produce bitwise-identical
// parameters and logs (wall_seconds aside).
TrainResult train(std::span<const TrajectoryDataset> worlds, const NetworkConfig& net_cfg,
                  const TrainingConfig& train_cfg);

TrainResult train(const TrajectoryDataset& dataset, const NetworkConfig& net_cfg,
                  const TrainingConfig& train_cfg);

// CSV: epoch,mean_loss,mean_speed_loss,mean_direction_loss,wall_seconds
void save_training_log_csv(std::span<const EpochLogRow> log, const std::string& path);

}  // namespace crowdnav
