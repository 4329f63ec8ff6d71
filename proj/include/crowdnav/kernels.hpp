#pragma once

#include <vector>

#include "crowdnav/tensor.hpp"

namespace crowdnav {

// Dense and convolution kernels behind the network. Every parallel loop
// writes each output element from exactly one thread, so results are
// bitwise identical to the serial reference for any thread count.
namespace kernels {

// y[r] += sum_c W[r,c] * x[c]
void matvec_acc(const double* w, int rows, int cols, const double* x, double* y);

// dx[c] += sum_r W[r,c] * dy[r]
void matvec_transpose_acc(const double* w, int rows, int cols, const double* dy, double* dx);

// dW[r,c] += dy[r] * x[c]
void outer_acc(const double* dy, int rows, const double* x, int cols, double* dw);

// 1-D convolution along positions, kernel width 3, stride 1, zero padded,
// tanh activation. w is [filters, channels, 3]; in holds one pointer per
// input channel (each length `positions`); out is [filters * positions].
void conv1d_tanh_forward(const double* w, const double* bias, int filters,
                         const std::vector<const double*>& in, int positions, double* out);

// Backward pass of the above. d_out and out are [filters * positions].
// d_in, when non-null, receives gradients for the first `d_in_channels`
// input channels (the chained ones; skip channels from the raw input do
// not need gradients).
void conv1d_tanh_backward(const double* w, int filters, const std::vector<const double*>& in,
                          int positions, const double* out, const double* d_out, double* d_w,
                          double* d_bias, double* d_in, int d_in_channels);

namespace reference {
// Serial twins used by tests and the benchmark target.
void matvec_acc(const double* w, int rows, int cols, const double* x, double* y);
void conv1d_tanh_forward(const double* w, const double* bias, int filters,
                         const std::vector<const double*>& in, int positions, double* out);
}  // namespace reference

}  // namespace kernels
}  // namespace crowdnav
