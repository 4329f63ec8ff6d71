#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "crowdnav/dataset.hpp"
#include "crowdnav/network.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav::testutil {

inline std::filesystem::path tmp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("crowdnav_" + tag);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small networks for gradient checks and smoke training. The full-size
// pairing of variant and depth is deliberately not enforced here.
inline NetworkConfig toy_lstm_config(int conv_layers = 2, int filters = 2, int units = 4) {
    NetworkConfig cfg;
    cfg.variant = NetworkVariant::kLstm;
    cfg.conv_layers = conv_layers;
    cfg.filters_per_layer = filters;
    cfg.lstm_units = units;
    cfg.dense_units = units;
    cfg.dropout_rate = 0.0;
    cfg.sigma_deg = 5.0;
    cfg.bptt_window = 20;
    return cfg;
}

inline NetworkConfig toy_conv_config(int conv_layers = 3, int filters = 2, int units = 4) {
    NetworkConfig cfg = toy_lstm_config(conv_layers, filters, units);
    cfg.variant = NetworkVariant::kConvOnly;
    return cfg;
}

inline StateMatrix random_state(Rng& rng) {
    LidarScan prev, cur;
    prev.max_range = cur.max_range = 30.0;
    for (auto& r : prev.ranges) r = rng.uniform(0.5, 30.0);
    for (auto& r : cur.ranges) r = rng.uniform(0.5, 30.0);
    const Vec2 robot{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const Vec2 target{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    return encode_state(prev, cur, encode_target(robot, target));
}

inline std::vector<SequenceItem> random_sequence(int steps, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SequenceItem> seq;
    for (int t = 0; t < steps; ++t) {
        SequenceItem item;
        item.state = random_state(rng);
        item.label.speed = rng.uniform(0.2, 2.0);
        item.label.heading_deg = rng.uniform(0.0, 360.0);
        seq.push_back(std::move(item));
    }
    return seq;
}

// Window for finite-difference checks: the steps see very different scans,
// so no feature has near-zero batch variance. Tiny variance makes the
// batch-norm normalizer sharply curved and blows up the h^2 truncation
// error of a fixed-step central difference.
inline std::vector<SequenceItem> contrasting_sequence(int steps, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SequenceItem> seq;
    for (int t = 0; t < steps; ++t) {
        LidarScan prev, cur;
        prev.max_range = cur.max_range = 30.0;
        const double lo = t % 2 == 0 ? 18.0 : 0.5;
        const double hi = t % 2 == 0 ? 30.0 : 6.0;
        for (auto& r : prev.ranges) r = rng.uniform(lo, hi);
        for (auto& r : cur.ranges) r = rng.uniform(lo, hi);
        const Vec2 robot{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const Vec2 target{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        SequenceItem item;
        item.state = encode_state(prev, cur, encode_target(robot, target));
        item.label.speed = rng.uniform(0.2, 2.0);
        item.label.heading_deg = rng.uniform(0.0, 360.0);
        seq.push_back(std::move(item));
    }
    return seq;
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
};

inline double rel_err(double a, double b, double floor_value) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_value});
}

// Central finite differences over every trainable parameter entry, checked
// against the analytic gradients along the identical forward path.
inline GradCheckResult finite_difference_check(const NamedTensors& params,
                                               const NetworkConfig& cfg,
                                               std::span<const SequenceItem> window,
                                               const GradOptions& opts, double step = 1e-4,
                                               double floor_value = 1e-5) {
    const GradResult analytic = gradients(params, cfg, window, opts);
    GradCheckResult result;
    for (std::size_t e = 0; e < params.items().size(); ++e) {
        const auto& entry = params.items()[e];
        if (!entry.trainable) continue;
        const auto n = static_cast<long>(entry.tensor.size());
        std::vector<double> errs(static_cast<std::size_t>(n));
#pragma omp parallel
        {
            NamedTensors probe = params;  // one working copy per thread
#pragma omp for schedule(dynamic, 16)
            for (long i = 0; i < n; ++i) {
                double& p = probe.items()[e].tensor.data[static_cast<std::size_t>(i)];
                const double saved = p;
                p = saved + step;
                const double up = sequence_loss(probe, cfg, window, opts);
                p = saved - step;
                const double down = sequence_loss(probe, cfg, window, opts);
                p = saved;
                const double fd = (up - down) / (2.0 * step);
                const double an =
                    analytic.grads.items()[e].tensor.data[static_cast<std::size_t>(i)];
                errs[static_cast<std::size_t>(i)] = rel_err(an, fd, floor_value);
            }
        }
        for (long i = 0; i < n; ++i) {
            if (errs[static_cast<std::size_t>(i)] > result.max_rel_err) {
                result.max_rel_err = errs[static_cast<std::size_t>(i)];
                result.worst_param = entry.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

// Straight constant-speed tracks: analytic labels, fast rollouts and (step
// displacement > 0.5 m) exact endpoint arrival.
inline TrajectoryDataset straight_line_dataset(int tracks, int steps_per_track, double speed,
                                               std::uint64_t seed, double dt = 0.4) {
    Rng rng(seed);
    TrajectoryDataset ds;
    ds.dt = dt;
    for (int i = 0; i < tracks; ++i) {
        AgentTrack track;
        track.id = i + 1;
        Vec2 pos{rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0)};
        const Vec2 dir = dir_from_deg(rng.uniform(0.0, 360.0));
        for (int k = 0; k <= steps_per_track; ++k) {
            track.samples.push_back({k * dt, pos});
            pos += dir * (speed * dt);
        }
        ds.agents.push_back(std::move(track));
    }
    recompute_bounds(ds);
    return ds;
}

}  // namespace crowdnav::testutil
