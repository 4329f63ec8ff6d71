#pragma once

#include <cstdint>
#include <string>

#include "crowdnav/network.hpp"
#include "crowdnav/optimizer.hpp"

namespace crowdnav {

struct Checkpoint {
    NetworkConfig config;
    NamedTensors params;
    AdadeltaState optimizer;
    std::uint64_t training_seed = 0;
    double lidar_max_range = 30.0;  // range the network was trained with
};

// Self-describing binary container: magic, a JSON header (config, seed,
// tensor directory), then all tensor payloads as little-endian 64-bit
// doubles in directory order. Identical inputs serialize byte-identically.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace crowdnav
