#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "crowdnav/checkpoint.hpp"
#include "crowdnav/encoding.hpp"
#include "crowdnav/lidar.hpp"
#include "crowdnav/network.hpp"
#include "crowdnav/sfm.hpp"

namespace crowdnav {

// Everything the simulator can tell a policy about the current step.
// Network policies read the scans and the target encoding; the SFM
// baseline reads the privileged scene, which is a documented asymmetry.
struct Observation {
    const LidarScan* scan_prev = nullptr;
    const LidarScan* scan_cur = nullptr;
    TargetEncoding target;
    Vec2 robot_pos;
    Vec2 robot_vel;  // realized velocity over the previous step
    Vec2 target_pos;
    const SceneSnapshot* scene = nullptr;
    double dt = 0.4;
};

// A navigation command source. step() must be deterministic given the
// policy's internal state and the observation.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void reset() = 0;
    // Returns (heading degrees, speed m/s).
    virtual std::pair<double, double> step(const Observation& obs) = 0;
};

// Runs a checkpointed network in eval mode, carrying the LSTM state.
class DeepMotionPolicy : public Policy {
public:
    DeepMotionPolicy(NetworkConfig cfg, const NamedTensors* params);
    void reset() override;
    std::pair<double, double> step(const Observation& obs) override;

private:
    NetworkConfig cfg_;
    const NamedTensors* params_;
    HiddenState hidden_;
};

class SfmPolicy : public Policy {
public:
    SfmPolicy(SfmParams params, double target_radius);
    void reset() override;
    std::pair<double, double> step(const Observation& obs) override;

private:
    SfmParams params_;
    double target_radius_;
    Vec2 vel_;
};

// Replays the replaced human's own velocity labels; past the recorded
// steps it commands speed 0. Ties the simulator to its labels.
class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(std::vector<StepLabel> labels);
    void reset() override;
    std::pair<double, double> step(const Observation& obs) override;

private:
    std::vector<StepLabel> labels_;
    std::size_t next_ = 0;
};

}  // namespace crowdnav
