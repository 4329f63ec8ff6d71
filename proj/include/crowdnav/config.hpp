#pragma once

#include <cstdint>
#include <string>

#include "crowdnav/network.hpp"
#include "crowdnav/rollout.hpp"
#include "crowdnav/sfm.hpp"
#include "crowdnav/train.hpp"

namespace crowdnav {

// Run configuration, loaded from a TOML-style sectioned key/value file.
// Every default below is an explicit decision; shipped configs list them
// all so a run is fully described by its file.
struct RunConfig {
    struct DatasetSection {
        std::string path;      // native dataset JSON; required by train/eval
        double dt = 0.4;
        double frame_rate = 15.0;  // obsmat frame column -> seconds
    } dataset;

    struct LidarSection {
        double max_range = 30.0;
        double agent_radius = 0.2;
    } lidar;

    NetworkConfig network;

    struct TrainingSection {
        int epochs = 100;
        std::uint64_t seed = 1;
        double l2_weight = 0.001;
        double sigma_deg = 5.0;
        double train_fraction = 2.0 / 3.0;
        int augment_copies = 0;
    } training;

    SfmParams sfm;

    RolloutConfig rollout;
};

// Parses the file; unknown keys are errors, missing keys fall back to the
// defaults above except dataset.path, which must exist when
// `require_dataset` is set. Referenced files are checked at load time.
RunConfig load_run_config(const std::string& path, bool require_dataset = true);

// Fully populated config document with comments; what `configs/` ships.
std::string default_config_text();

}  // namespace crowdnav
