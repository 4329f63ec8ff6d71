#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "crowdnav/checkpoint.hpp"
#include "crowdnav/network.hpp"
#include "crowdnav/optimizer.hpp"
#include "crowdnav/train.hpp"
#include "testutil.hpp"

using namespace crowdnav;

namespace {

NamedTensors zero_params(const NetworkConfig& cfg) {
    NamedTensors p = init_network_params(cfg, 1);
    for (auto& e : p.items())
        for (double& v : e.tensor.data) v = 0.0;
    for (double& v : p.get("bn.running_var").data) v = 1.0;
    return p;
}

}  // namespace

TEST_CASE("forward produces a normalized direction and nonnegative speed") {
    const NetworkConfig cfg = testutil::toy_lstm_config();
    const NamedTensors params = init_network_params(cfg, 7);
    Rng rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const StateMatrix state = testutil::random_state(rng);
        const auto mode = trial % 2 == 0 ? ForwardMode::kEval : ForwardMode::kTrain;
        const auto [pred, hidden] = forward(params, cfg, state, HiddenState::zero(cfg), mode);
        CHECK(pred.direction.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(pred.speed >= 0.0);
        (void)hidden;
    }
}

TEST_CASE("all-zero parameters yield the uniform direction") {
    const NetworkConfig cfg = testutil::toy_lstm_config();
    const NamedTensors params = zero_params(cfg);
    Rng rng(2);
    const auto [pred, _] =
        forward(params, cfg, testutil::random_state(rng), HiddenState::zero(cfg), ForwardMode::kEval);
    for (double p : pred.direction.p) CHECK(p == doctest::Approx(1.0 / kBeams).epsilon(1e-12));
}

TEST_CASE("carried hidden state changes the next prediction when recurrent weights are nonzero") {
    const NetworkConfig cfg = testutil::toy_lstm_config();
    NamedTensors params = zero_params(cfg);
    // Constructed weights: inputs reach the cell, the cell reaches the
    // heads, and the recurrent path is live.
    for (double& v : params.get("bn.gamma").data) v = 1.0;
    for (double& v : params.get("dir.lstm.w_x").data) v = 0.05;
    for (double& v : params.get("dir.lstm.w_h").data) v = 0.5;
    for (double& v : params.get("dir.dense.weight").data) v = 0.3;
    for (std::size_t i = 0; i < params.get("dir.head.weight").data.size(); ++i)
        params.get("dir.head.weight").data[i] = (i % 7 == 0) ? 0.8 : -0.1;

    Rng rng(3);
    const StateMatrix state = testutil::random_state(rng);
    const auto [pred1, h1] = forward(params, cfg, state, HiddenState::zero(cfg), ForwardMode::kEval);
    const auto [pred2, h2] = forward(params, cfg, state, h1, ForwardMode::kEval);
    double max_diff = 0.0;
    for (int i = 0; i < kBeams; ++i)
        max_diff = std::max(max_diff, std::abs(pred1.direction.p[static_cast<std::size_t>(i)] -
                                               pred2.direction.p[static_cast<std::size_t>(i)]));
    CHECK(max_diff > 1e-9);
    (void)h2;
}

TEST_CASE("conv-only predictions ignore the hidden state") {
    const NetworkConfig cfg = testutil::toy_conv_config();
    const NamedTensors params = init_network_params(cfg, 11);
    Rng rng(4);
    const StateMatrix state = testutil::random_state(rng);
    const auto [pred1, _1] = forward(params, cfg, state, HiddenState::zero(cfg), ForwardMode::kEval);
    HiddenState noise;  // deliberately not matching any LSTM layout
    const auto [pred2, _2] = forward(params, cfg, state, noise, ForwardMode::kEval);
    for (int i = 0; i < kBeams; ++i)
        CHECK(pred1.direction.p[static_cast<std::size_t>(i)] ==
              pred2.direction.p[static_cast<std::size_t>(i)]);
    CHECK(pred1.speed == pred2.speed);
}

TEST_CASE("loss identities") {
    // Perfect direction match: cross entropy equals the label entropy.
    const double sigma = 5.0;
    const StepLabel label{1.0, 137.0};
    Prediction pred;
    pred.direction = gaussian_direction_label(label.heading_deg, sigma);
    pred.speed = 1.0;
    const LossParts parts = loss(pred, label, sigma);
    CHECK(parts.speed == 0.0);
    double entropy = 0.0;
    for (double p : pred.direction.p)
        if (p > 0.0) entropy -= p * std::log(p);
    CHECK(parts.direction == doctest::Approx(entropy).epsilon(1e-9));

    // Speed term arithmetic.
    Prediction slow = pred;
    slow.speed = 0.5;
    CHECK(loss(slow, label, sigma).speed == 0.25);

    // Sigma zero with a one-hot match: direction term vanishes up to eps.
    Prediction onehot;
    onehot.direction = gaussian_direction_label(label.heading_deg, 0.0);
    onehot.speed = 1.0;
    CHECK(loss(onehot, label, 0.0).direction == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("full toy network gradients match finite differences") {
    const NetworkConfig cfg = testutil::toy_lstm_config(2, 1, 2);
    const NamedTensors params = init_network_params(cfg, 42);
    const auto window = testutil::contrasting_sequence(2, 99);
    const auto result = testutil::finite_difference_check(params, cfg, window, {});
    INFO("worst parameter: ", result.worst_param);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("conv-only toy network gradients match finite differences") {
    const NetworkConfig cfg = testutil::toy_conv_config(2, 1, 2);
    const NamedTensors params = init_network_params(cfg, 43);
    const auto window = testutil::contrasting_sequence(2, 100);
    const auto result = testutil::finite_difference_check(params, cfg, window, {});
    INFO("worst parameter: ", result.worst_param);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("gradients with dropout match finite differences along the same masks") {
    NetworkConfig cfg = testutil::toy_lstm_config(2, 1, 2);
    cfg.dropout_rate = 0.3;
    const NamedTensors params = init_network_params(cfg, 44);
    const auto window = testutil::contrasting_sequence(2, 101);
    GradOptions opts;
    opts.dropout_seed = 555;  // identical masks for every probe
    const auto result = testutil::finite_difference_check(params, cfg, window, opts);
    INFO("worst parameter: ", result.worst_param);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("gradients are deterministic and scale linearly with the loss") {
    const NetworkConfig cfg = testutil::toy_lstm_config(2, 2, 3);
    const NamedTensors params = init_network_params(cfg, 5);
    const auto window = testutil::random_sequence(3, 6);

    const GradResult a = gradients(params, cfg, window, {});
    const GradResult b = gradients(params, cfg, window, {});
    GradOptions doubled;
    doubled.loss_scale = 2.0;
    const GradResult c = gradients(params, cfg, window, doubled);

    for (std::size_t e = 0; e < a.grads.items().size(); ++e) {
        const auto& ta = a.grads.items()[e].tensor.data;
        const auto& tb = b.grads.items()[e].tensor.data;
        const auto& tc = c.grads.items()[e].tensor.data;
        for (std::size_t i = 0; i < ta.size(); ++i) {
            CHECK(ta[i] == tb[i]);
            CHECK(tc[i] == doctest::Approx(2.0 * ta[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("adadelta fixed point, first-step formula and determinism") {
    const NetworkConfig cfg = testutil::toy_lstm_config(1, 1, 2);
    NamedTensors params = init_network_params(cfg, 8);
    const NamedTensors before = params;
    NamedTensors grads = NamedTensors::zeros_like(params);
    AdadeltaState state = AdadeltaState::like(params);

    adadelta_step(params, grads, state, 0.0);
    for (std::size_t e = 0; e < params.items().size(); ++e)
        for (std::size_t i = 0; i < params.items()[e].tensor.size(); ++i)
            CHECK(params.items()[e].tensor.data[i] == before.items()[e].tensor.data[i]);

    // First step with gradient g: |update| = sqrt(eps)/sqrt(0.05 g^2 + eps) * g.
    const double g = 0.7;
    for (auto& e : grads.items())
        for (double& v : e.tensor.data) v = g;
    NamedTensors stepped = before;
    AdadeltaState fresh = AdadeltaState::like(stepped);
    adadelta_step(stepped, grads, fresh, 0.0);
    const double expected = std::sqrt(1e-6) / std::sqrt(0.05 * g * g + 1e-6) * g;
    const auto& p0 = stepped.items()[0];
    REQUIRE(p0.trainable);
    for (std::size_t i = 0; i < p0.tensor.size(); ++i)
        CHECK(before.items()[0].tensor.data[i] - p0.tensor.data[i] ==
              doctest::Approx(expected).epsilon(1e-12));

    // Determinism: identical states and gradients, identical results.
    NamedTensors p1 = before, p2 = before;
    AdadeltaState s1 = AdadeltaState::like(p1), s2 = AdadeltaState::like(p2);
    adadelta_step(p1, grads, s1, 0.001);
    adadelta_step(p2, grads, s2, 0.001);
    for (std::size_t e = 0; e < p1.items().size(); ++e)
        for (std::size_t i = 0; i < p1.items()[e].tensor.size(); ++i)
            CHECK(p1.items()[e].tensor.data[i] == p2.items()[e].tensor.data[i]);
}

TEST_CASE("adadelta leaves batch-norm running moments untouched") {
    const NetworkConfig cfg = testutil::toy_lstm_config(1, 1, 2);
    NamedTensors params = init_network_params(cfg, 9);
    NamedTensors grads = NamedTensors::zeros_like(params);
    for (auto& e : grads.items())
        for (double& v : e.tensor.data) v = 1.0;
    AdadeltaState state = AdadeltaState::like(params);
    adadelta_step(params, grads, state, 0.5);
    for (double v : params.get("bn.running_mean").data) CHECK(v == 0.0);
    for (double v : params.get("bn.running_var").data) CHECK(v == 1.0);
}

TEST_CASE("training on a tiny dataset reduces the loss and is reproducible") {
    NetworkConfig cfg = testutil::toy_lstm_config(2, 1, 4);
    cfg.sigma_deg = 0.0;
    const TrajectoryDataset ds = testutil::straight_line_dataset(2, 8, 1.5, 12);
    TrainingConfig tc;
    tc.epochs = 40;
    tc.seed = 3;
    tc.l2_weight = 0.0;
    const TrainResult r1 = train(ds, cfg, tc);
    REQUIRE(r1.log.size() == 40);
    CHECK(r1.log.back().mean_loss < r1.log.front().mean_loss * 0.8);

    const TrainResult r2 = train(ds, cfg, tc);
    for (std::size_t i = 0; i < r1.log.size(); ++i) {
        CHECK(r1.log[i].mean_loss == r2.log[i].mean_loss);
        CHECK(r1.log[i].mean_speed_loss == r2.log[i].mean_speed_loss);
        CHECK(r1.log[i].mean_direction_loss == r2.log[i].mean_direction_loss);
    }
    for (std::size_t e = 0; e < r1.params.items().size(); ++e)
        for (std::size_t i = 0; i < r1.params.items()[e].tensor.size(); ++i)
            CHECK(r1.params.items()[e].tensor.data[i] == r2.params.items()[e].tensor.data[i]);
}

TEST_CASE("zero epochs returns the seeded initialization") {
    const NetworkConfig cfg = testutil::toy_lstm_config(2, 1, 3);
    const TrajectoryDataset ds = testutil::straight_line_dataset(2, 6, 1.5, 13);
    TrainingConfig tc;
    tc.epochs = 0;
    tc.seed = 77;
    const TrainResult r = train(ds, cfg, tc);
    const NamedTensors init = init_network_params(cfg, 77);
    for (std::size_t e = 0; e < r.params.items().size(); ++e)
        for (std::size_t i = 0; i < r.params.items()[e].tensor.size(); ++i)
            CHECK(r.params.items()[e].tensor.data[i] == init.items()[e].tensor.data[i]);
    CHECK(r.log.empty());
}

TEST_CASE("checkpoints round-trip bitwise") {
    const NetworkConfig cfg = testutil::toy_lstm_config(2, 2, 3);
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.params = init_network_params(cfg, 21);
    ckpt.optimizer = AdadeltaState::like(ckpt.params);
    ckpt.optimizer.avg_sq_grad.items()[0].tensor.data[0] = 0.125;
    ckpt.training_seed = 21;
    ckpt.lidar_max_range = 30.0;

    const auto path = (testutil::tmp_dir("network") / "ckpt.bin").string();
    save_checkpoint(ckpt, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.config.conv_layers == cfg.conv_layers);
    CHECK(back.config.variant == cfg.variant);
    CHECK(back.training_seed == 21);
    CHECK(back.lidar_max_range == 30.0);
    REQUIRE(back.params.items().size() == ckpt.params.items().size());
    for (std::size_t e = 0; e < ckpt.params.items().size(); ++e) {
        CHECK(back.params.items()[e].name == ckpt.params.items()[e].name);
        CHECK(back.params.items()[e].trainable == ckpt.params.items()[e].trainable);
        for (std::size_t i = 0; i < ckpt.params.items()[e].tensor.size(); ++i)
            CHECK(back.params.items()[e].tensor.data[i] == ckpt.params.items()[e].tensor.data[i]);
    }
    CHECK(back.optimizer.avg_sq_grad.items()[0].tensor.data[0] == 0.125);
}

TEST_CASE("non-finite inputs raise errors naming the layer") {
    const NetworkConfig cfg = testutil::toy_lstm_config(1, 1, 2);
    NamedTensors params = init_network_params(cfg, 30);
    params.get("conv0.weight").data[0] = std::numeric_limits<double>::infinity();
    Rng rng(31);
    const StateMatrix state = testutil::random_state(rng);
    CHECK_THROWS_WITH_AS(forward(params, cfg, state, HiddenState::zero(cfg), ForwardMode::kEval),
                         doctest::Contains("conv0"), std::runtime_error);
}
