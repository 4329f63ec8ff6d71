#include "crowdnav/network.hpp"

#include <cmath>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/kernels.hpp"
#include "crowdnav/layers.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav {

namespace {

constexpr double kBnEps = 1e-3;

void check_finite(const double* v, std::size_t n, const std::string& layer) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(v[i]))
            throw std::runtime_error("non-finite activation in layer " + layer);
}

struct Dims {
    int positions;  // conv length
    int filters;    // channels out of every conv layer
    int layers;     // conv depth
    int flat;       // positions * filters + target dims
    int hidden;     // LSTM units per branch (0 for ConvOnly)
    int dense;      // dense layer width
    int dense_in;   // what feeds the dense layer: LSTM output or the features
    bool lstm;
};

Dims dims_of(const NetworkConfig& cfg) {
    Dims d;
    d.positions = kStateRows;
    d.filters = cfg.filters_per_layer;
    d.layers = cfg.conv_layers;
    d.flat = cfg.flat_features();
    d.lstm = cfg.has_lstm();
    d.hidden = d.lstm ? cfg.lstm_units : 0;
    d.dense = cfg.dense_units;
    d.dense_in = d.lstm ? d.hidden : d.flat;
    return d;
}

int conv_in_channels(const Dims& d, int layer) { return layer == 0 ? 2 : d.filters + 2; }

std::string conv_w(int l) { return "conv" + std::to_string(l) + ".weight"; }
std::string conv_b(int l) { return "conv" + std::to_string(l) + ".bias"; }

const char* kBranches[2] = {"dir", "speed"};

// Input channel pointers for conv layer `l`: the previous layer's output
// channels followed by both raw state columns (the skip from the input).
std::vector<const double*> conv_inputs(const Dims& d, const StateMatrix& state,
                                       const double* prev_out, int layer) {
    std::vector<const double*> in;
    if (layer > 0) {
        in.reserve(static_cast<std::size_t>(d.filters) + 2);
        for (int f = 0; f < d.filters; ++f)
            in.push_back(prev_out + static_cast<std::size_t>(f) * d.positions);
    }
    in.push_back(state.cols[0].data());
    in.push_back(state.cols[1].data());
    return in;
}

// Runs the conv stack for one step and assembles the flattened feature
// vector (conv output ++ raw target encoding) into z. layer_outs, when
// non-null, keeps every layer's activation for the backward pass.
void conv_stack_forward(const NamedTensors& params, const Dims& d, const StateMatrix& state,
                        std::vector<std::vector<double>>* layer_outs, double* z) {
    const auto plane = static_cast<std::size_t>(d.filters) * d.positions;
    std::vector<double> buf_a(plane);
    std::vector<double> buf_b(plane);
    const double* prev = nullptr;
    double* cur = buf_a.data();
    for (int l = 0; l < d.layers; ++l) {
        const auto& w = params.get(conv_w(l));
        const auto& b = params.get(conv_b(l));
        const auto in = conv_inputs(d, state, prev, l);
        kernels::conv1d_tanh_forward(w.data.data(), b.data.data(), d.filters, in, d.positions, cur);
        check_finite(cur, plane, "conv" + std::to_string(l));
        if (layer_outs) (*layer_outs)[static_cast<std::size_t>(l)].assign(cur, cur + plane);
        prev = cur;
        cur = (cur == buf_a.data()) ? buf_b.data() : buf_a.data();
    }
    std::memcpy(z, prev, sizeof(double) * plane);
    // Re-feed only the raw target location after the conv stack.
    for (int j = 0; j < kTargetDim; ++j)
        z[plane + static_cast<std::size_t>(j)] = state.cols[0][static_cast<std::size_t>(kBeams + j)];
}

struct LstmTensors {
    const Tensor* wx;
    const Tensor* wh;
    const Tensor* bias;
};

LstmTensors lstm_tensors(const NamedTensors& params, const std::string& branch) {
    return {&params.get(branch + ".lstm.w_x"), &params.get(branch + ".lstm.w_h"),
            &params.get(branch + ".lstm.bias")};
}

// Pre-activations then the cell nonlinearity.
void lstm_step(const LstmTensors& t, int hidden, const double* x, int x_dim, const double* h_prev,
               const double* c_prev, double* gates, double* c, double* tanh_c, double* h) {
    const int rows = 4 * hidden;
    std::memcpy(gates, t.bias->data.data(), sizeof(double) * static_cast<std::size_t>(rows));
    kernels::matvec_acc(t.wx->data.data(), rows, x_dim, x, gates);
    kernels::matvec_acc(t.wh->data.data(), rows, hidden, h_prev, gates);
    layers::lstm_cell_forward(c_prev, hidden, gates, c, tanh_c, h);
}

}  // namespace

void NetworkConfig::validate_variant_depth() const {
    if (variant == NetworkVariant::kLstm && conv_layers != 9)
        throw UserError("network: the lstm variant uses 9 conv layers, got " +
                        std::to_string(conv_layers));
    if (variant == NetworkVariant::kConvOnly && conv_layers <= 9)
        throw UserError("network: the conv-only variant compensates depth with more than 9 conv "
                        "layers, got " +
                        std::to_string(conv_layers));
}

std::string variant_name(NetworkVariant v) {
    return v == NetworkVariant::kLstm ? "lstm" : "conv-only";
}

NetworkVariant variant_from_name(const std::string& name) {
    if (name == "lstm") return NetworkVariant::kLstm;
    if (name == "conv-only" || name == "conv_only" || name == "conv")
        return NetworkVariant::kConvOnly;
    throw UserError("unknown network variant: " + name);
}

HiddenState HiddenState::zero(const NetworkConfig& cfg) {
    HiddenState h;
    if (cfg.has_lstm()) {
        const auto n = static_cast<std::size_t>(cfg.lstm_units);
        h.dir_h.assign(n, 0.0);
        h.dir_c.assign(n, 0.0);
        h.speed_h.assign(n, 0.0);
        h.speed_c.assign(n, 0.0);
    }
    return h;
}

NamedTensors init_network_params(const NetworkConfig& cfg, std::uint64_t seed) {
    if (cfg.conv_layers < 1 || cfg.filters_per_layer < 1 || cfg.dense_units < 1 ||
        (cfg.has_lstm() && cfg.lstm_units < 1))
        throw UserError("network: layer counts and widths must be >= 1");
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
        throw UserError("network: dropout rate must be in [0, 1)");
    const Dims d = dims_of(cfg);
    NamedTensors params;
    for (int l = 0; l < d.layers; ++l) {
        params.add(conv_w(l), {d.filters, conv_in_channels(d, l), 3});
        params.add(conv_b(l), {d.filters});
    }
    params.add("bn.gamma", {d.flat});
    params.add("bn.beta", {d.flat});
    params.add("bn.running_mean", {d.flat}, /*trainable=*/false);
    params.add("bn.running_var", {d.flat}, /*trainable=*/false);
    for (const char* branch : kBranches) {
        const std::string p(branch);
        if (d.lstm) {
            params.add(p + ".lstm.w_x", {4 * d.hidden, d.flat});
            params.add(p + ".lstm.w_h", {4 * d.hidden, d.hidden});
            params.add(p + ".lstm.bias", {4 * d.hidden});
        }
        params.add(p + ".dense.weight", {d.dense, d.dense_in});
        params.add(p + ".dense.bias", {d.dense});
    }
    params.add("dir.head.weight", {kBeams, d.dense});
    params.add("dir.head.bias", {kBeams});
    params.add("speed.head.weight", {1, d.dense});
    params.add("speed.head.bias", {1});

    Rng rng(seed);
    auto fill_uniform = [&rng](Tensor& t, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : t.data) v = rng.uniform(-s, s);
    };
    for (int l = 0; l < d.layers; ++l)
        fill_uniform(params.get(conv_w(l)), conv_in_channels(d, l) * 3);
    for (double& v : params.get("bn.gamma").data) v = 1.0;
    for (double& v : params.get("bn.running_var").data) v = 1.0;
    for (const char* branch : kBranches) {
        const std::string p(branch);
        if (d.lstm) {
            fill_uniform(params.get(p + ".lstm.w_x"), d.flat);
            fill_uniform(params.get(p + ".lstm.w_h"), d.hidden);
            // Forget gates start open.
            auto& b = params.get(p + ".lstm.bias");
            for (int j = 0; j < d.hidden; ++j) b.data[static_cast<std::size_t>(d.hidden + j)] = 1.0;
        }
        fill_uniform(params.get(p + ".dense.weight"), d.dense_in);
    }
    fill_uniform(params.get("dir.head.weight"), d.dense);
    fill_uniform(params.get("speed.head.weight"), d.dense);
    return params;
}

LossParts loss(const Prediction& pred, const StepLabel& label, double sigma_deg) {
    LossParts parts;
    const double dv = label.speed - pred.speed;
    parts.speed = dv * dv;
    const DirectionDistribution target = gaussian_direction_label(label.heading_deg, sigma_deg);
    double ce = 0.0;
    for (int i = 0; i < kBeams; ++i) {
        const double p = target.p[static_cast<std::size_t>(i)];
        if (p > 0.0)
            ce -= p * std::log(pred.direction.p[static_cast<std::size_t>(i)] + kCrossEntropyEps);
    }
    parts.direction = ce;
    return parts;
}

std::pair<Prediction, HiddenState> forward(const NamedTensors& params, const NetworkConfig& cfg,
                                           const StateMatrix& state, const HiddenState& hidden,
                                           ForwardMode mode) {
    const Dims d = dims_of(cfg);
    if (d.lstm && (hidden.dir_h.size() != static_cast<std::size_t>(d.hidden) ||
                   hidden.speed_h.size() != static_cast<std::size_t>(d.hidden)))
        throw std::invalid_argument("hidden state does not match the network config");

    const auto nd = static_cast<std::size_t>(d.flat);
    std::vector<double> z(nd);
    conv_stack_forward(params, d, state, nullptr, z.data());

    // Batch norm. Eval mode uses the running moments; single-step train
    // mode normalizes against this one sample, which reduces to the shift
    // term (training proper goes through the windowed path). Dropout is a
    // training-window concern and never applies to a single-step pass.
    const auto& gamma = params.get("bn.gamma").data;
    const auto& beta = params.get("bn.beta").data;
    std::vector<double> y(nd);
    if (mode == ForwardMode::kEval) {
        const auto& mean = params.get("bn.running_mean").data;
        const auto& var = params.get("bn.running_var").data;
        for (std::size_t k = 0; k < nd; ++k)
            y[k] = gamma[k] * (z[k] - mean[k]) / std::sqrt(var[k] + kBnEps) + beta[k];
    } else {
        std::vector<double> mean(nd), var(nd), x_hat(nd);
        layers::batchnorm_forward(z.data(), 1, d.flat, gamma.data(), beta.data(), kBnEps,
                                  mean.data(), var.data(), x_hat.data(), y.data());
    }
    check_finite(y.data(), nd, "batchnorm");

    HiddenState next = hidden;
    Prediction pred;
    std::vector<double> dense_out(static_cast<std::size_t>(d.dense));
    std::vector<double> logits(kBeams);
    for (int br = 0; br < 2; ++br) {
        const std::string p(kBranches[br]);
        const double* dense_in = y.data();
        std::vector<double> gates(static_cast<std::size_t>(4 * d.hidden));
        if (d.lstm) {
            auto& hn = br == 0 ? next.dir_h : next.speed_h;
            auto& cn = br == 0 ? next.dir_c : next.speed_c;
            std::vector<double> tanh_c(static_cast<std::size_t>(d.hidden));
            const auto& hp = br == 0 ? hidden.dir_h : hidden.speed_h;
            const auto& cp = br == 0 ? hidden.dir_c : hidden.speed_c;
            lstm_step(lstm_tensors(params, p), d.hidden, y.data(), d.flat, hp.data(), cp.data(),
                      gates.data(), cn.data(), tanh_c.data(), hn.data());
            check_finite(hn.data(), hn.size(), p + ".lstm");
            dense_in = hn.data();
        }
        layers::dense_tanh_forward(params.get(p + ".dense.weight").data.data(),
                                   params.get(p + ".dense.bias").data.data(), dense_in, d.dense_in,
                                   dense_out.data(), d.dense);
        check_finite(dense_out.data(), dense_out.size(), p + ".dense");
        if (br == 0) {
            std::memcpy(logits.data(), params.get("dir.head.bias").data.data(),
                        sizeof(double) * kBeams);
            kernels::matvec_acc(params.get("dir.head.weight").data.data(), kBeams, d.dense,
                                dense_out.data(), logits.data());
            check_finite(logits.data(), logits.size(), "dir.head");
            layers::softmax(logits.data(), kBeams, pred.direction.p.data());
        } else {
            double s = params.get("speed.head.bias").data[0];
            kernels::matvec_acc(params.get("speed.head.weight").data.data(), 1, d.dense,
                                dense_out.data(), &s);
            check_finite(&s, 1, "speed.head");
            pred.speed = layers::softplus(s);
        }
    }
    return {std::move(pred), std::move(next)};
}

// ---------------------------------------------------------------------------
// Windowed forward/backward used by training and the gradient checks.
// ---------------------------------------------------------------------------

namespace {

struct BranchCache {
    // Per step: activated gates [4H], cell [H], tanh(cell) [H], hidden [H].
    std::vector<std::vector<double>> gates, c, tanh_c, h;
    std::vector<std::vector<double>> dense_out;  // [U]
};

struct WindowCache {
    std::vector<std::vector<std::vector<double>>> conv_outs;  // [step][layer][F*P]
    std::vector<double> z;       // pre-BN features, row-major [n x D]
    std::vector<double> mean, var;  // batch stats [D]
    std::vector<double> x_hat;   // normalized features [n x D]
    std::vector<double> mask;    // dropout multipliers [n x D] (empty at rate 0)
    std::vector<double> y;       // post-dropout features [n x D]
    BranchCache branch[2];
    std::vector<std::vector<double>> probs;  // dir softmax [step][kBeams]
    std::vector<double> speed_logit, speed;  // [step]
    HiddenState h0;
};

// Forward over the window with train-mode batch norm (statistics over the
// window's steps) and seeded dropout. Fills the cache when given one.
LossParts window_forward(const NamedTensors& params, const NetworkConfig& cfg,
                         std::span<const SequenceItem> window, const GradOptions& opts,
                         WindowCache* cache, HiddenState* final_hidden) {
    if (window.empty()) throw UserError("gradient window must contain at least 1 step");
    const Dims d = dims_of(cfg);
    const int n = static_cast<int>(window.size());
    const auto nd = static_cast<std::size_t>(d.flat);

    WindowCache local;
    WindowCache& c = cache ? *cache : local;
    if (cache)
        c.conv_outs.assign(
            static_cast<std::size_t>(n),
            std::vector<std::vector<double>>(
                static_cast<std::size_t>(d.layers),
                std::vector<double>(static_cast<std::size_t>(d.filters) * d.positions)));

    c.z.assign(static_cast<std::size_t>(n) * nd, 0.0);
    for (int t = 0; t < n; ++t)
        conv_stack_forward(params, d, window[static_cast<std::size_t>(t)].state,
                           cache ? &c.conv_outs[static_cast<std::size_t>(t)] : nullptr,
                           c.z.data() + static_cast<std::size_t>(t) * nd);

    const auto& gamma = params.get("bn.gamma").data;
    const auto& beta = params.get("bn.beta").data;
    c.mean.assign(nd, 0.0);
    c.var.assign(nd, 0.0);
    c.x_hat.assign(static_cast<std::size_t>(n) * nd, 0.0);
    c.y.assign(static_cast<std::size_t>(n) * nd, 0.0);
    layers::batchnorm_forward(c.z.data(), n, d.flat, gamma.data(), beta.data(), kBnEps,
                              c.mean.data(), c.var.data(), c.x_hat.data(), c.y.data());
    check_finite(c.y.data(), c.y.size(), "batchnorm");

    c.mask.clear();
    if (cfg.dropout_rate > 0.0) {
        Rng drop_rng(opts.dropout_seed);
        const double rate = cfg.dropout_rate;
        const double keep_scale = 1.0 / (1.0 - rate);
        c.mask.resize(static_cast<std::size_t>(n) * nd);
        for (std::size_t i = 0; i < c.mask.size(); ++i) {
            c.mask[i] = drop_rng.uniform() >= rate ? keep_scale : 0.0;
            c.y[i] *= c.mask[i];
        }
    }

    // Branch LSTMs unrolled over the window, then the dense stacks.
    c.h0 = opts.initial_hidden ? *opts.initial_hidden : HiddenState::zero(cfg);
    if (d.lstm && c.h0.dir_h.size() != static_cast<std::size_t>(d.hidden))
        throw std::invalid_argument("initial hidden state does not match the network config");
    c.probs.assign(static_cast<std::size_t>(n), std::vector<double>(kBeams));
    c.speed_logit.assign(static_cast<std::size_t>(n), 0.0);
    c.speed.assign(static_cast<std::size_t>(n), 0.0);

    for (int br = 0; br < 2; ++br) {
        const std::string p(kBranches[br]);
        auto& bc = c.branch[br];
        bc.dense_out.assign(static_cast<std::size_t>(n),
                            std::vector<double>(static_cast<std::size_t>(d.dense)));
        if (d.lstm) {
            bc.gates.assign(static_cast<std::size_t>(n),
                            std::vector<double>(static_cast<std::size_t>(4 * d.hidden)));
            bc.c.assign(static_cast<std::size_t>(n),
                        std::vector<double>(static_cast<std::size_t>(d.hidden)));
            bc.tanh_c.assign(static_cast<std::size_t>(n),
                             std::vector<double>(static_cast<std::size_t>(d.hidden)));
            bc.h.assign(static_cast<std::size_t>(n),
                        std::vector<double>(static_cast<std::size_t>(d.hidden)));
            const auto t_lstm = lstm_tensors(params, p);
            const double* h_prev = (br == 0 ? c.h0.dir_h : c.h0.speed_h).data();
            const double* c_prev = (br == 0 ? c.h0.dir_c : c.h0.speed_c).data();
            for (int t = 0; t < n; ++t) {
                const auto ts = static_cast<std::size_t>(t);
                lstm_step(t_lstm, d.hidden, c.y.data() + ts * nd, d.flat, h_prev, c_prev,
                          bc.gates[ts].data(), bc.c[ts].data(), bc.tanh_c[ts].data(),
                          bc.h[ts].data());
                check_finite(bc.h[ts].data(), bc.h[ts].size(), p + ".lstm");
                h_prev = bc.h[ts].data();
                c_prev = bc.c[ts].data();
            }
        }
        const auto& dw = params.get(p + ".dense.weight").data;
        const auto& db = params.get(p + ".dense.bias").data;
        for (int t = 0; t < n; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            const double* in = d.lstm ? bc.h[ts].data() : c.y.data() + ts * nd;
            layers::dense_tanh_forward(dw.data(), db.data(), in, d.dense_in,
                                       bc.dense_out[ts].data(), d.dense);
            check_finite(bc.dense_out[ts].data(), bc.dense_out[ts].size(), p + ".dense");
        }
    }

    std::vector<double> logits(kBeams);
    LossParts total;
    for (int t = 0; t < n; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        std::memcpy(logits.data(), params.get("dir.head.bias").data.data(),
                    sizeof(double) * kBeams);
        kernels::matvec_acc(params.get("dir.head.weight").data.data(), kBeams, d.dense,
                            c.branch[0].dense_out[ts].data(), logits.data());
        check_finite(logits.data(), logits.size(), "dir.head");
        layers::softmax(logits.data(), kBeams, c.probs[ts].data());

        double s = params.get("speed.head.bias").data[0];
        kernels::matvec_acc(params.get("speed.head.weight").data.data(), 1, d.dense,
                            c.branch[1].dense_out[ts].data(), &s);
        check_finite(&s, 1, "speed.head");
        c.speed_logit[ts] = s;
        c.speed[ts] = layers::softplus(s);

        Prediction pred;
        pred.direction.p = c.probs[ts];
        pred.speed = c.speed[ts];
        const LossParts parts = loss(pred, window[ts].label, cfg.sigma_deg);
        total.speed += parts.speed;
        total.direction += parts.direction;
    }
    total.speed /= n;
    total.direction /= n;

    if (final_hidden) {
        if (d.lstm) {
            const auto last = static_cast<std::size_t>(n - 1);
            final_hidden->dir_h = c.branch[0].h[last];
            final_hidden->dir_c = c.branch[0].c[last];
            final_hidden->speed_h = c.branch[1].h[last];
            final_hidden->speed_c = c.branch[1].c[last];
        } else {
            *final_hidden = HiddenState{};
        }
    }
    return total;
}

}  // namespace

double sequence_loss(const NamedTensors& params, const NetworkConfig& cfg,
                     std::span<const SequenceItem> window, const GradOptions& opts) {
    const LossParts parts = window_forward(params, cfg, window, opts, nullptr, nullptr);
    return opts.loss_scale * parts.total();
}

GradResult gradients(const NamedTensors& params, const NetworkConfig& cfg,
                     std::span<const SequenceItem> window, const GradOptions& opts) {
    const Dims d = dims_of(cfg);
    const int n = static_cast<int>(window.size());
    const auto nd = static_cast<std::size_t>(d.flat);

    GradResult result;
    WindowCache cache;
    const LossParts parts = window_forward(params, cfg, window, opts, &cache, &result.final_hidden);
    result.mean_loss = parts.total();
    result.mean_speed_loss = parts.speed;
    result.mean_direction_loss = parts.direction;
    result.batch_mean = cache.mean;
    result.batch_var = cache.var;
    result.grads = NamedTensors::zeros_like(params);
    NamedTensors& g = result.grads;

    const double step_w = opts.loss_scale / n;

    // Gradient w.r.t. the post-dropout features across both branches.
    std::vector<double> d_y(static_cast<std::size_t>(n) * nd, 0.0);
    // Gradient arriving at each branch's per-step dense input.
    std::vector<std::vector<double>> d_dense_in[2];
    for (auto& v : d_dense_in)
        v.assign(static_cast<std::size_t>(n),
                 std::vector<double>(static_cast<std::size_t>(d.dense_in), 0.0));

    std::vector<double> d_logits(kBeams);
    std::vector<double> d_dense(static_cast<std::size_t>(d.dense));
    DirectionDistribution target;
    for (int t = 0; t < n; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const SequenceItem& item = window[ts];

        // Direction head.
        target = gaussian_direction_label(item.label.heading_deg, cfg.sigma_deg);
        layers::softmax_cross_entropy(target.p.data(), cache.probs[ts].data(), kBeams, step_w,
                                      d_logits.data());
        kernels::outer_acc(d_logits.data(), kBeams, cache.branch[0].dense_out[ts].data(), d.dense,
                           g.get("dir.head.weight").data.data());
        for (int i = 0; i < kBeams; ++i)
            g.get("dir.head.bias").data[static_cast<std::size_t>(i)] +=
                d_logits[static_cast<std::size_t>(i)];
        std::fill(d_dense.begin(), d_dense.end(), 0.0);
        kernels::matvec_transpose_acc(params.get("dir.head.weight").data.data(), kBeams, d.dense,
                                      d_logits.data(), d_dense.data());
        {
            const double* in = d.lstm ? cache.branch[0].h[ts].data() : cache.y.data() + ts * nd;
            layers::dense_tanh_backward(params.get("dir.dense.weight").data.data(), in,
                                        cache.branch[0].dense_out[ts].data(), d.dense_in, d.dense,
                                        d_dense.data(), g.get("dir.dense.weight").data.data(),
                                        g.get("dir.dense.bias").data.data(),
                                        d_dense_in[0][ts].data());
        }

        // Speed head.
        double d_s = 0.0;
        layers::softplus_squared_error(item.label.speed, cache.speed_logit[ts], step_w, &d_s);
        kernels::outer_acc(&d_s, 1, cache.branch[1].dense_out[ts].data(), d.dense,
                           g.get("speed.head.weight").data.data());
        g.get("speed.head.bias").data[0] += d_s;
        std::fill(d_dense.begin(), d_dense.end(), 0.0);
        kernels::matvec_transpose_acc(params.get("speed.head.weight").data.data(), 1, d.dense, &d_s,
                                      d_dense.data());
        {
            const double* in = d.lstm ? cache.branch[1].h[ts].data() : cache.y.data() + ts * nd;
            layers::dense_tanh_backward(params.get("speed.dense.weight").data.data(), in,
                                        cache.branch[1].dense_out[ts].data(), d.dense_in, d.dense,
                                        d_dense.data(), g.get("speed.dense.weight").data.data(),
                                        g.get("speed.dense.bias").data.data(),
                                        d_dense_in[1][ts].data());
        }
    }

    // LSTM branches: backpropagation through time, reversed over the window.
    if (d.lstm) {
        std::vector<double> d_h(static_cast<std::size_t>(d.hidden));
        std::vector<double> d_c(static_cast<std::size_t>(d.hidden));
        std::vector<double> d_gates(static_cast<std::size_t>(4 * d.hidden));
        for (int br = 0; br < 2; ++br) {
            const std::string p(kBranches[br]);
            const auto t_lstm = lstm_tensors(params, p);
            auto& bc = cache.branch[br];
            Tensor& g_wx = g.get(p + ".lstm.w_x");
            Tensor& g_wh = g.get(p + ".lstm.w_h");
            Tensor& g_b = g.get(p + ".lstm.bias");
            std::fill(d_h.begin(), d_h.end(), 0.0);
            std::fill(d_c.begin(), d_c.end(), 0.0);
            for (int t = n - 1; t >= 0; --t) {
                const auto ts = static_cast<std::size_t>(t);
                for (int j = 0; j < d.hidden; ++j)
                    d_h[static_cast<std::size_t>(j)] +=
                        d_dense_in[br][ts][static_cast<std::size_t>(j)];
                const double* h_prev = t > 0 ? bc.h[ts - 1].data()
                                             : (br == 0 ? cache.h0.dir_h : cache.h0.speed_h).data();
                const double* c_prev = t > 0 ? bc.c[ts - 1].data()
                                             : (br == 0 ? cache.h0.dir_c : cache.h0.speed_c).data();
                layers::lstm_cell_backward(bc.gates[ts].data(), bc.tanh_c[ts].data(), c_prev,
                                           d.hidden, d_h.data(), d_c.data(), d_gates.data());
                kernels::outer_acc(d_gates.data(), 4 * d.hidden, cache.y.data() + ts * nd, d.flat,
                                   g_wx.data.data());
                kernels::outer_acc(d_gates.data(), 4 * d.hidden, h_prev, d.hidden, g_wh.data.data());
                for (int j = 0; j < 4 * d.hidden; ++j)
                    g_b.data[static_cast<std::size_t>(j)] += d_gates[static_cast<std::size_t>(j)];
                kernels::matvec_transpose_acc(t_lstm.wx->data.data(), 4 * d.hidden, d.flat,
                                              d_gates.data(), d_y.data() + ts * nd);
                std::fill(d_h.begin(), d_h.end(), 0.0);
                kernels::matvec_transpose_acc(t_lstm.wh->data.data(), 4 * d.hidden, d.hidden,
                                              d_gates.data(), d_h.data());
            }
        }
    } else {
        for (int t = 0; t < n; ++t)
            for (std::size_t k = 0; k < nd; ++k)
                d_y[static_cast<std::size_t>(t) * nd + k] =
                    d_dense_in[0][static_cast<std::size_t>(t)][k] +
                    d_dense_in[1][static_cast<std::size_t>(t)][k];
    }

    // Dropout, then batch norm over the window's batch statistics.
    if (cfg.dropout_rate > 0.0)
        for (std::size_t i = 0; i < d_y.size(); ++i) d_y[i] *= cache.mask[i];

    std::vector<double> d_z(static_cast<std::size_t>(n) * nd);
    layers::batchnorm_backward(cache.x_hat.data(), n, d.flat, params.get("bn.gamma").data.data(),
                               cache.var.data(), kBnEps, d_y.data(),
                               g.get("bn.gamma").data.data(), g.get("bn.beta").data.data(),
                               d_z.data());

    // Conv stack, per step; only the flattened conv block feeds back (the
    // target tail is raw input).
    std::vector<double> d_out(static_cast<std::size_t>(d.filters) * d.positions);
    std::vector<double> d_in(static_cast<std::size_t>(d.filters) * d.positions);
    for (int t = 0; t < n; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const StateMatrix& state = window[ts].state;
        std::memcpy(d_out.data(), d_z.data() + ts * nd,
                    sizeof(double) * static_cast<std::size_t>(d.filters) * d.positions);
        for (int l = d.layers - 1; l >= 0; --l) {
            const double* prev_out =
                l > 0 ? cache.conv_outs[ts][static_cast<std::size_t>(l - 1)].data() : nullptr;
            const auto in = conv_inputs(d, state, prev_out, l);
            const bool need_d_in = l > 0;
            if (need_d_in) std::fill(d_in.begin(), d_in.end(), 0.0);
            kernels::conv1d_tanh_backward(
                params.get(conv_w(l)).data.data(), d.filters, in, d.positions,
                cache.conv_outs[ts][static_cast<std::size_t>(l)].data(), d_out.data(),
                g.get(conv_w(l)).data.data(), g.get(conv_b(l)).data.data(),
                need_d_in ? d_in.data() : nullptr, need_d_in ? d.filters : 0);
            if (need_d_in) std::swap(d_out, d_in);
        }
    }

    for (const auto& entry : g.items())
        if (!entry.tensor.all_finite())
            throw std::runtime_error("non-finite gradient for parameter " + entry.name);
    return result;
}

}  // namespace crowdnav
