#pragma once

#include <cstddef>

namespace crowdnav {

// The building blocks the network composes. Exposed so each layer type can
// be gradient-checked in isolation; the conv kernel lives in kernels.hpp.
namespace layers {

double sigmoid(double x);
double softplus(double x);

void softmax(const double* logits, int n, double* probs);

// Cross entropy -sum p log(q + eps) against probs = softmax(logits).
// d_logits receives weight * d(ce)/d(logit). Returns the ce value.
double softmax_cross_entropy(const double* target, const double* probs, int n, double weight,
                             double* d_logits);

// Squared error (v - softplus(s))^2 of the speed head. d_logit receives
// weight * d/ds. Returns the error value.
double softplus_squared_error(double label_speed, double logit, double weight, double* d_logit);

// One LSTM cell step: gate layout [input, forget, cell-candidate, output].
// gates must hold the pre-activation Wx*x + Wh*h_prev + b on entry and
// holds the activated gates on exit.
void lstm_cell_forward(const double* c_prev, int hidden, double* gates, double* c, double* tanh_c,
                       double* h);

// Cell-local backward: consumes d_h (gradient at h) and the d_c carry from
// the later step, emits pre-activation gate gradients and updates d_c with
// the carry toward the earlier step. Weight routing stays with the caller.
void lstm_cell_backward(const double* gates, const double* tanh_c, const double* c_prev,
                        int hidden, const double* d_h, double* d_c, double* d_gates);

// Batch norm over rows: x is [n x d] row-major, statistics are per column
// (biased variance). Writes mean/var [d], x_hat and y [n x d].
void batchnorm_forward(const double* x, int n, int d, const double* gamma, const double* beta,
                       double eps, double* mean, double* var, double* x_hat, double* y);

// d_x may alias d_y. d_gamma/d_beta are accumulated into.
void batchnorm_backward(const double* x_hat, int n, int d, const double* gamma, const double* var,
                        double eps, const double* d_y, double* d_gamma, double* d_beta,
                        double* d_x);

// out = tanh(W x + b), W is [out_dim x in_dim].
void dense_tanh_forward(const double* w, const double* b, const double* x, int in_dim, double* out,
                        int out_dim);

// Accumulates d_w, d_b and d_x (d_x may be null).
void dense_tanh_backward(const double* w, const double* x, const double* out, int in_dim,
                         int out_dim, const double* d_out, double* d_w, double* d_b, double* d_x);

}  // namespace layers
}  // namespace crowdnav
