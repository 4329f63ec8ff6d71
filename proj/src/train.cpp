#include "crowdnav/train.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "crowdnav/errors.hpp"
#include "crowdnav/lidar.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav {

namespace {

SceneSnapshot scene_at(const TrajectoryDataset& ds, double t, int excluded_id,
                       double agent_radius) {
    SceneSnapshot scene;
    scene.map = &ds.map;
    scene.agent_radius = agent_radius;
    scene.excluded_id = excluded_id;
    for (const auto& agent : ds.agents) {
        if (agent.id == excluded_id) continue;
        Vec2 p;
        if (agent.position_at(t, &p)) scene.agents.push_back({agent.id, p});
    }
    return scene;
}

}  // namespace

std::vector<SequenceItem> build_track_sequence(const TrajectoryDataset& ds,
                                               const AgentTrack& track, double lidar_max_range,
                                               double agent_radius) {
    const auto labels = velocity_labels(track, ds.dt);
    const Vec2 target = track.samples.back().pos;

    std::vector<SequenceItem> seq;
    seq.reserve(labels.size());
    LidarScan scan_prev;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double t = track.samples[i].t;
        const Vec2 pos = track.samples[i].pos;
        const SceneSnapshot scene = scene_at(ds, t, track.id, agent_radius);
        const LidarScan scan_cur = simulate_scan(scene, pos, lidar_max_range);
        if (i == 0) scan_prev = scan_cur;  // no earlier observation exists
        SequenceItem item;
        item.state = encode_state(scan_prev, scan_cur, encode_target(pos, target));
        item.label = labels[i];
        seq.push_back(std::move(item));
        scan_prev = scan_cur;
    }
    return seq;
}

TrainResult train(std::span<const TrajectoryDataset> worlds, const NetworkConfig& net_cfg,
                  const TrainingConfig& train_cfg) {
    struct TrackRef {
        std::size_t world;
        std::size_t agent;
    };
    std::vector<TrackRef> tracks;
    for (std::size_t w = 0; w < worlds.size(); ++w)
        for (std::size_t a = 0; a < worlds[w].agents.size(); ++a)
            if (worlds[w].agents[a].samples.size() >= 3) tracks.push_back({w, a});
    if (tracks.empty()) throw UserError("training needs at least one track with 3 or more samples");

    // Scans depend only on the data, so the per-track sequences are built
    // once up front.
    std::vector<std::vector<SequenceItem>> sequences;
    sequences.reserve(tracks.size());
    for (const auto& ref : tracks)
        sequences.push_back(build_track_sequence(worlds[ref.world], worlds[ref.world].agents[ref.agent],
                                                 train_cfg.lidar_max_range, train_cfg.agent_radius));

    TrainResult result;
    result.params = init_network_params(net_cfg, train_cfg.seed);
    result.optimizer = AdadeltaState::like(result.params);

    const double momentum = net_cfg.bn_momentum;
    auto& running_mean = result.params.get("bn.running_mean").data;
    auto& running_var = result.params.get("bn.running_var").data;

    std::vector<std::size_t> order(sequences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(train_cfg.seed, 0x51u, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0, speed_sum = 0.0, dir_sum = 0.0;
        std::size_t step_count = 0;
        std::uint64_t window_index = 0;
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const auto& seq = sequences[order[oi]];
            HiddenState hidden = HiddenState::zero(net_cfg);
            for (std::size_t begin = 0; begin < seq.size(); begin += static_cast<std::size_t>(net_cfg.bptt_window)) {
                const std::size_t len =
                    std::min(seq.size() - begin, static_cast<std::size_t>(net_cfg.bptt_window));
                GradOptions opts;
                opts.dropout_seed =
                    Rng::mix(train_cfg.seed, static_cast<std::uint64_t>(epoch), ++window_index);
                opts.initial_hidden = &hidden;
                const GradResult gr = gradients(result.params, net_cfg,
                                                std::span(seq.data() + begin, len), opts);
                adadelta_step(result.params, gr.grads, result.optimizer, train_cfg.l2_weight);
                for (std::size_t k = 0; k < running_mean.size(); ++k) {
                    running_mean[k] = momentum * running_mean[k] + (1.0 - momentum) * gr.batch_mean[k];
                    running_var[k] = momentum * running_var[k] + (1.0 - momentum) * gr.batch_var[k];
                }
                hidden = gr.final_hidden;  // truncation point: carried as a constant
                loss_sum += gr.mean_loss * static_cast<double>(len);
                speed_sum += gr.mean_speed_loss * static_cast<double>(len);
                dir_sum += gr.mean_direction_loss * static_cast<double>(len);
                step_count += len;
            }
        }
        const auto now = std::chrono::steady_clock::now();
        EpochLogRow row;
        row.epoch = epoch;
        row.mean_loss = loss_sum / static_cast<double>(step_count);
        row.mean_speed_loss = speed_sum / static_cast<double>(step_count);
        row.mean_direction_loss = dir_sum / static_cast<double>(step_count);
        row.wall_seconds = std::chrono::duration<double>(now - t_start).count();
        result.log.push_back(row);
    }
    return result;
}

TrainResult train(const TrajectoryDataset& dataset, const NetworkConfig& net_cfg,
                  const TrainingConfig& train_cfg) {
    return train(std::span(&dataset, 1), net_cfg, train_cfg);
}

void save_training_log_csv(std::span<const EpochLogRow> log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot write training log: " + path);
    out << "epoch,mean_loss,mean_speed_loss,mean_direction_loss,wall_seconds\n";
    char buf[256];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.3f\n", row.epoch, row.mean_loss,
                      row.mean_speed_loss, row.mean_direction_loss, row.wall_seconds);
        out << buf;
    }
}

}  // namespace crowdnav
