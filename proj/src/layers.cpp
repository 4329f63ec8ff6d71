#include "crowdnav/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crowdnav/kernels.hpp"
#include "crowdnav/network.hpp"

namespace crowdnav {
namespace layers {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

void softmax(const double* logits, int n, double* probs) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        total += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= total;
}

double softmax_cross_entropy(const double* target, const double* probs, int n, double weight,
                             double* d_logits) {
    double ce = 0.0;
    double r_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (target[i] > 0.0) ce -= target[i] * std::log(probs[i] + kCrossEntropyEps);
        // r_i = p_i q_i / (q_i + eps); with eps -> 0 this is p_i.
        d_logits[i] = target[i] * probs[i] / (probs[i] + kCrossEntropyEps);
        r_sum += d_logits[i];
    }
    for (int i = 0; i < n; ++i) d_logits[i] = weight * (probs[i] * r_sum - d_logits[i]);
    return ce;
}

double softplus_squared_error(double label_speed, double logit, double weight, double* d_logit) {
    const double v_hat = softplus(logit);
    const double dv = label_speed - v_hat;
    *d_logit = weight * (-2.0 * dv * sigmoid(logit));
    return dv * dv;
}

void lstm_cell_forward(const double* c_prev, int hidden, double* gates, double* c, double* tanh_c,
                       double* h) {
    for (int j = 0; j < hidden; ++j) {
        const double gi = sigmoid(gates[j]);
        const double gf = sigmoid(gates[hidden + j]);
        const double gg = std::tanh(gates[2 * hidden + j]);
        const double go = sigmoid(gates[3 * hidden + j]);
        gates[j] = gi;
        gates[hidden + j] = gf;
        gates[2 * hidden + j] = gg;
        gates[3 * hidden + j] = go;
        c[j] = gf * c_prev[j] + gi * gg;
        tanh_c[j] = std::tanh(c[j]);
        h[j] = go * tanh_c[j];
    }
}

void lstm_cell_backward(const double* gates, const double* tanh_c, const double* c_prev,
                        int hidden, const double* d_h, double* d_c, double* d_gates) {
    for (int j = 0; j < hidden; ++j) {
        const double gi = gates[j];
        const double gf = gates[hidden + j];
        const double gg = gates[2 * hidden + j];
        const double go = gates[3 * hidden + j];
        const double tc = tanh_c[j];
        const double dht = d_h[j];
        const double dct = d_c[j] + dht * go * (1.0 - tc * tc);
        d_gates[j] = dct * gg * gi * (1.0 - gi);
        d_gates[hidden + j] = dct * c_prev[j] * gf * (1.0 - gf);
        d_gates[2 * hidden + j] = dct * gi * (1.0 - gg * gg);
        d_gates[3 * hidden + j] = dht * tc * go * (1.0 - go);
        d_c[j] = dct * gf;
    }
}

void batchnorm_forward(const double* x, int n, int d, const double* gamma, const double* beta,
                       double eps, double* mean, double* var, double* x_hat, double* y) {
#pragma omp parallel for schedule(static) if (d > 2048)
    for (int k = 0; k < d; ++k) {
        double m = 0.0;
        for (int t = 0; t < n; ++t) m += x[static_cast<std::size_t>(t) * d + k];
        m /= n;
        double v = 0.0;
        for (int t = 0; t < n; ++t) {
            const double e = x[static_cast<std::size_t>(t) * d + k] - m;
            v += e * e;
        }
        v /= n;
        mean[k] = m;
        var[k] = v;
        const double inv_std = 1.0 / std::sqrt(v + eps);
        for (int t = 0; t < n; ++t) {
            const std::size_t i = static_cast<std::size_t>(t) * d + k;
            x_hat[i] = (x[i] - m) * inv_std;
            y[i] = gamma[k] * x_hat[i] + beta[k];
        }
    }
}

void batchnorm_backward(const double* x_hat, int n, int d, const double* gamma, const double* var,
                        double eps, const double* d_y, double* d_gamma, double* d_beta,
                        double* d_x) {
#pragma omp parallel for schedule(static) if (d > 2048)
    for (int k = 0; k < d; ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (int t = 0; t < n; ++t) {
            const std::size_t i = static_cast<std::size_t>(t) * d + k;
            s1 += d_y[i];
            s2 += d_y[i] * x_hat[i];
        }
        d_gamma[k] += s2;
        d_beta[k] += s1;
        const double gs = gamma[k] / std::sqrt(var[k] + eps);
        for (int t = 0; t < n; ++t) {
            const std::size_t i = static_cast<std::size_t>(t) * d + k;
            d_x[i] = gs * (d_y[i] - s1 / n - x_hat[i] * s2 / n);
        }
    }
}

void dense_tanh_forward(const double* w, const double* b, const double* x, int in_dim, double* out,
                        int out_dim) {
    for (int i = 0; i < out_dim; ++i) out[i] = b[i];
    kernels::matvec_acc(w, out_dim, in_dim, x, out);
    for (int i = 0; i < out_dim; ++i) out[i] = std::tanh(out[i]);
}

void dense_tanh_backward(const double* w, const double* x, const double* out, int in_dim,
                         int out_dim, const double* d_out, double* d_w, double* d_b, double* d_x) {
    // d_pre reuses a small stack-ish buffer; widths are tens of units.
    std::vector<double> d_pre(static_cast<std::size_t>(out_dim));
    for (int i = 0; i < out_dim; ++i) d_pre[static_cast<std::size_t>(i)] = d_out[i] * (1.0 - out[i] * out[i]);
    kernels::outer_acc(d_pre.data(), out_dim, x, in_dim, d_w);
    for (int i = 0; i < out_dim; ++i) d_b[i] += d_pre[static_cast<std::size_t>(i)];
    if (d_x) kernels::matvec_transpose_acc(w, out_dim, in_dim, d_pre.data(), d_x);
}

}  // namespace layers
}  // namespace crowdnav
