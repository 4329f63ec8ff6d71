// Times the OpenMP kernels against their serial references. Not a test:
// numbers here are for eyeballing scaling, correctness equivalence lives
// in the unit tests.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "crowdnav/dataset.hpp"
#include "crowdnav/kernels.hpp"
#include "crowdnav/lidar.hpp"
#include "crowdnav/encoding.hpp"
#include "crowdnav/metrics.hpp"
#include "crowdnav/network.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/rng.hpp"
#include "crowdnav/threading.hpp"

using namespace crowdnav;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_ms(int reps, F&& fn) {
    const double t0 = now_ms();
    for (int i = 0; i < reps; ++i) fn();
    return (now_ms() - t0) / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

TrajectoryDataset synthetic_dataset(int tracks) {
    Rng rng(99);
    TrajectoryDataset ds;
    ds.dt = 0.4;
    for (int i = 0; i < tracks; ++i) {
        AgentTrack t;
        t.id = i + 1;
        Vec2 pos{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        const Vec2 step = dir_from_deg(rng.uniform(0.0, 360.0)) * 0.6;
        for (int k = 0; k <= 20; ++k) {
            t.samples.push_back({k * 0.4, pos});
            pos += step;
        }
        ds.agents.push_back(std::move(t));
    }
    ds.map.segments.push_back({{-15, -15}, {15, -15}});
    ds.map.segments.push_back({{15, -15}, {15, 15}});
    ds.map.segments.push_back({{15, 15}, {-15, 15}});
    recompute_bounds(ds);
    return ds;
}

}  // namespace

int main(int argc, char** argv) {
    int threads = worker_threads();
    int reps = 20;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
        if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    }
    omp_set_num_threads(threads);
    std::printf("threads: %d, reps per measurement: %d\n\n", threads, reps);

    Rng rng(7);

    // Scan synthesis over a crowded scene.
    {
        ObstacleMap map;
        for (int i = 0; i < 12; ++i)
            map.segments.push_back({{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                                    {rng.uniform(-10, 10), rng.uniform(-10, 10)}});
        SceneSnapshot scene{&map, {}, 0.2, -1};
        for (int i = 0; i < 24; ++i)
            scene.agents.push_back({i, {rng.uniform(-8, 8), rng.uniform(-8, 8)}});
        volatile double sink = 0.0;
        const double serial = time_ms(reps, [&] {
            for (int p = 0; p < 16; ++p)
                sink = reference::simulate_scan(scene, {p * 0.1, 0.0}, 30.0).ranges[0];
        });
        const double parallel = time_ms(reps, [&] {
            for (int p = 0; p < 16; ++p)
                sink = simulate_scan(scene, {p * 0.1, 0.0}, 30.0).ranges[0];
        });
        report("lidar scan x16", serial, parallel);
        (void)sink;
    }

    // Conv layer at full width: 8 filters over 10 channels x 721.
    {
        const int filters = 8, channels = 10, positions = kStateRows;
        std::vector<double> w(static_cast<std::size_t>(filters) * channels * 3);
        std::vector<double> b(filters);
        std::vector<double> x(static_cast<std::size_t>(channels) * positions);
        std::vector<double> out(static_cast<std::size_t>(filters) * positions);
        for (auto& v : w) v = rng.uniform(-0.3, 0.3);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        std::vector<const double*> in;
        for (int c = 0; c < channels; ++c) in.push_back(x.data() + c * positions);
        const double serial = time_ms(reps, [&] {
            for (int i = 0; i < 64; ++i)
                kernels::reference::conv1d_tanh_forward(w.data(), b.data(), filters, in, positions,
                                                        out.data());
        });
        const double parallel = time_ms(reps, [&] {
            for (int i = 0; i < 64; ++i)
                kernels::conv1d_tanh_forward(w.data(), b.data(), filters, in, positions, out.data());
        });
        report("conv 8x(3x1) x64", serial, parallel);
    }

    // The LSTM input matrix-vector product that dominates training.
    {
        const int rows = 4 * 64, cols = kStateRows * 8 + kTargetDim;
        std::vector<double> w(static_cast<std::size_t>(rows) * cols);
        std::vector<double> x(cols), y(rows);
        for (auto& v : w) v = rng.uniform(-0.1, 0.1);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        const double serial = time_ms(reps, [&] {
            for (int i = 0; i < 16; ++i) kernels::reference::matvec_acc(w.data(), rows, cols, x.data(), y.data());
        });
        const double parallel = time_ms(reps, [&] {
            for (int i = 0; i < 16; ++i) kernels::matvec_acc(w.data(), rows, cols, x.data(), y.data());
        });
        report("lstm matvec 256x6129 x16", serial, parallel);
    }

    // Informational: one eval-mode forward pass of the full architecture.
    {
        NetworkConfig cfg;
        const NamedTensors params = init_network_params(cfg, 1);
        LidarScan prev, cur;
        for (int i = 0; i < kBeams; ++i) {
            prev.ranges[static_cast<std::size_t>(i)] = rng.uniform(1.0, 30.0);
            cur.ranges[static_cast<std::size_t>(i)] = rng.uniform(1.0, 30.0);
        }
        const StateMatrix state = encode_state(prev, cur, encode_target({0, 0}, {5, 3}));
        HiddenState hidden = HiddenState::zero(cfg);
        const double ms = time_ms(std::max(reps, 10), [&] {
            auto [pred, next] = forward(params, cfg, state, hidden, ForwardMode::kEval);
            hidden = std::move(next);
        });
        std::printf("%-28s %9.3f ms per pass\n", "full network forward", ms);
    }

    // Scenario-parallel evaluation with the oracle policy.
    {
        const TrajectoryDataset ds = synthetic_dataset(24);
        const auto scenarios = make_scenarios(ds);
        const auto factory = [](const Scenario& sc,
                                const TrajectoryDataset& d) -> std::unique_ptr<Policy> {
            return std::make_unique<OraclePolicy>(velocity_labels(*d.find_agent(sc.human_id), d.dt));
        };
        const int eval_reps = std::max(1, reps / 4);
        const double serial = time_ms(eval_reps, [&] {
            reference::evaluate(factory, ds, scenarios, RolloutConfig{});
        });
        const double parallel = time_ms(eval_reps, [&] {
            evaluate(factory, ds, scenarios, RolloutConfig{});
        });
        report("evaluate 24 scenarios", serial, parallel);
    }
    return 0;
}
