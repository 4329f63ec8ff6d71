#include "crowdnav/policy.hpp"

#include <stdexcept>

namespace crowdnav {

DeepMotionPolicy::DeepMotionPolicy(NetworkConfig cfg, const NamedTensors* params)
    : cfg_(std::move(cfg)), params_(params), hidden_(HiddenState::zero(cfg_)) {}

void DeepMotionPolicy::reset() { hidden_ = HiddenState::zero(cfg_); }

std::pair<double, double> DeepMotionPolicy::step(const Observation& obs) {
    if (!obs.scan_prev || !obs.scan_cur)
        throw std::invalid_argument("network policy needs both scans");
    const StateMatrix state = encode_state(*obs.scan_prev, *obs.scan_cur, obs.target);
    auto [pred, next] = forward(*params_, cfg_, state, hidden_, ForwardMode::kEval);
    hidden_ = std::move(next);
    return {decode_direction(pred.direction), pred.speed};
}

SfmPolicy::SfmPolicy(SfmParams params, double target_radius)
    : params_(params), target_radius_(target_radius) {}

void SfmPolicy::reset() { vel_ = {0.0, 0.0}; }

std::pair<double, double> SfmPolicy::step(const Observation& obs) {
    if (!obs.scene) throw std::invalid_argument("sfm policy needs the privileged scene");
    const auto [heading, speed] =
        sfm_policy_step(obs.robot_pos, vel_, obs.target_pos, *obs.scene, params_, obs.dt,
                        target_radius_);
    vel_ = dir_from_deg(heading) * speed;
    return {heading, speed};
}

OraclePolicy::OraclePolicy(std::vector<StepLabel> labels) : labels_(std::move(labels)) {}

void OraclePolicy::reset() { next_ = 0; }

std::pair<double, double> OraclePolicy::step(const Observation&) {
    if (next_ >= labels_.size()) return {0.0, 0.0};  // recording exhausted
    const StepLabel& lab = labels_[next_++];
    return {lab.heading_deg, lab.speed};
}

}  // namespace crowdnav
