#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/dataset.hpp"
#include "crowdnav/encoding.hpp"
#include "crowdnav/tensor.hpp"

namespace crowdnav {

enum class NetworkVariant { kLstm, kConvOnly };

struct NetworkConfig {
    NetworkVariant variant = NetworkVariant::kLstm;
    int conv_layers = 9;        // lstm variant depth; ConvOnly compensates with 13
    int filters_per_layer = 8;  // (3x1) kernels, stride 1, zero padded
    int lstm_units = 64;
    int dense_units = 64;
    double dropout_rate = 0.2;
    double sigma_deg = 5.0;   // label smoothing
    int bptt_window = 20;     // unroll length for truncated BPTT
    double bn_momentum = 0.9; // running-moment update

    int flat_features() const { return kStateRows * filters_per_layer + kTargetDim; }
    bool has_lstm() const { return variant == NetworkVariant::kLstm; }

    // Enforces the variant/depth pairing (LSTM: 9 conv layers, ConvOnly:
    // more than 9). Applied when loading run configs; tests may build
    // smaller networks directly.
    void validate_variant_depth() const;
};

std::string variant_name(NetworkVariant v);
NetworkVariant variant_from_name(const std::string& name);

// Per-branch LSTM carry. Empty for the ConvOnly variant.
struct HiddenState {
    std::vector<double> dir_h, dir_c;
    std::vector<double> speed_h, speed_c;

    static HiddenState zero(const NetworkConfig& cfg);
    bool operator==(const HiddenState&) const = default;
};

struct Prediction {
    DirectionDistribution direction;  // softmax output, sums to 1
    double speed = 0.0;               // softplus output, >= 0
};

enum class ForwardMode { kTrain, kEval };

// Uniform fan-in scaled init; forget-gate biases start at 1, batch-norm
// running moments at (0, 1).
NamedTensors init_network_params(const NetworkConfig& cfg, std::uint64_t seed);

// Single-step pass. kEval uses running batch-norm moments and no dropout
// (deterministic); kTrain normalizes with the statistics of this one
// sample, which degenerates to the shift term -- training always goes
// through the windowed path in gradients()/train(). Throws on non-finite
// activations, naming the layer.
std::pair<Prediction, HiddenState> forward(const NamedTensors& params, const NetworkConfig& cfg,
                                           const StateMatrix& state, const HiddenState& hidden,
                                           ForwardMode mode);

struct LossParts {
    double speed = 0.0;      // (v - v_hat)^2
    double direction = 0.0;  // cross entropy against the smoothed label
    double total() const { return speed + direction; }
};

// Per-step loss of Eq-2 form: squared speed error plus cross entropy of
// the direction output against the Gaussian-smoothed label,
// H(p, q) = -sum p_i log(q_i + eps) with eps = 1e-12.
LossParts loss(const Prediction& pred, const StepLabel& label, double sigma_deg);

inline constexpr double kCrossEntropyEps = 1e-12;

struct SequenceItem {
    StateMatrix state;
    StepLabel label;
};

struct GradOptions {
    std::uint64_t dropout_seed = 0;  // masks derive from this; rate 0 ignores it
    double loss_scale = 1.0;         // scales the objective (and so every gradient)
    const HiddenState* initial_hidden = nullptr;  // defaults to zeros
};

struct GradResult {
    NamedTensors grads;  // same names/shapes as params; zero for non-trainable entries
    double mean_loss = 0.0;
    double mean_speed_loss = 0.0;
    double mean_direction_loss = 0.0;
    // Batch statistics of the flattened features over this window, for the
    // caller to fold into the running moments (keeps gradients() pure).
    std::vector<double> batch_mean, batch_var;
    HiddenState final_hidden;
};

// Exact reverse-mode gradients of the mean per-step loss over the given
// sequence, with both LSTMs unrolled over the whole window. Batch norm
// uses batch statistics over the window's steps. Throws on non-finite
// gradients, naming the parameter.
GradResult gradients(const NamedTensors& params, const NetworkConfig& cfg,
                     std::span<const SequenceItem> window, const GradOptions& opts = {});

// Mean loss over the window along the identical forward path gradients()
// differentiates (same batch-norm statistics, same dropout masks). This is
// what finite-difference checks must probe.
double sequence_loss(const NamedTensors& params, const NetworkConfig& cfg,
                     std::span<const SequenceItem> window, const GradOptions& opts = {});

}  // namespace crowdnav
