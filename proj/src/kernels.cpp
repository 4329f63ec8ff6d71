#include "crowdnav/kernels.hpp"

#include <cmath>

namespace crowdnav {
namespace kernels {

namespace {
// Parallel regions only pay off past this much work per call.
constexpr long kGrain = 1 << 15;
}  // namespace

void matvec_acc(const double* w, int rows, int cols, const double* x, double* y) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > kGrain)
    for (int r = 0; r < rows; ++r) {
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

void matvec_transpose_acc(const double* w, int rows, int cols, const double* dy, double* dx) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > kGrain)
    for (int c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < rows; ++r) acc += w[static_cast<std::size_t>(r) * cols + c] * dy[r];
        dx[c] += acc;
    }
}

void outer_acc(const double* dy, int rows, const double* x, int cols, double* dw) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > kGrain)
    for (int r = 0; r < rows; ++r) {
        double* dwr = dw + static_cast<std::size_t>(r) * cols;
        const double g = dy[r];
        for (int c = 0; c < cols; ++c) dwr[c] += g * x[c];
    }
}

void conv1d_tanh_forward(const double* w, const double* bias, int filters,
                         const std::vector<const double*>& in, int positions, double* out) {
    const int channels = static_cast<int>(in.size());
#pragma omp parallel for schedule(static) if (static_cast<long>(filters) * positions * channels > kGrain)
    for (int f = 0; f < filters; ++f) {
        double* of = out + static_cast<std::size_t>(f) * positions;
        const double* wf = w + static_cast<std::size_t>(f) * channels * 3;
        for (int p = 0; p < positions; ++p) {
            double acc = bias[f];
            for (int c = 0; c < channels; ++c) {
                const double* wc = wf + c * 3;
                const double* ic = in[static_cast<std::size_t>(c)];
                if (p > 0) acc += wc[0] * ic[p - 1];
                acc += wc[1] * ic[p];
                if (p + 1 < positions) acc += wc[2] * ic[p + 1];
            }
            of[p] = std::tanh(acc);
        }
    }
}

void conv1d_tanh_backward(const double* w, int filters, const std::vector<const double*>& in,
                          int positions, const double* out, const double* d_out, double* d_w,
                          double* d_bias, double* d_in, int d_in_channels) {
    const int channels = static_cast<int>(in.size());

    // d_pre = d_out * (1 - out^2), folded inline below.
#pragma omp parallel for schedule(static) if (static_cast<long>(filters) * positions * channels > kGrain)
    for (int f = 0; f < filters; ++f) {
        const double* of = out + static_cast<std::size_t>(f) * positions;
        const double* dof = d_out + static_cast<std::size_t>(f) * positions;
        double* dwf = d_w + static_cast<std::size_t>(f) * channels * 3;
        double db = 0.0;
        for (int p = 0; p < positions; ++p) {
            const double dpre = dof[p] * (1.0 - of[p] * of[p]);
            db += dpre;
            for (int c = 0; c < channels; ++c) {
                const double* ic = in[static_cast<std::size_t>(c)];
                double* dwc = dwf + c * 3;
                if (p > 0) dwc[0] += dpre * ic[p - 1];
                dwc[1] += dpre * ic[p];
                if (p + 1 < positions) dwc[2] += dpre * ic[p + 1];
            }
        }
        d_bias[f] += db;
    }

    if (!d_in) return;
#pragma omp parallel for schedule(static) if (static_cast<long>(filters) * positions * d_in_channels > kGrain)
    for (int c = 0; c < d_in_channels; ++c) {
        double* dic = d_in + static_cast<std::size_t>(c) * positions;
        for (int p = 0; p < positions; ++p) {
            double acc = 0.0;
            for (int f = 0; f < filters; ++f) {
                const double* of = out + static_cast<std::size_t>(f) * positions;
                const double* dof = d_out + static_cast<std::size_t>(f) * positions;
                const double* wfc = w + (static_cast<std::size_t>(f) * channels + c) * 3;
                // in[c][p] feeds out[f][p-1] via tap 2, out[f][p] via tap 1,
                // out[f][p+1] via tap 0.
                if (p > 0) acc += dof[p - 1] * (1.0 - of[p - 1] * of[p - 1]) * wfc[2];
                acc += dof[p] * (1.0 - of[p] * of[p]) * wfc[1];
                if (p + 1 < positions) acc += dof[p + 1] * (1.0 - of[p + 1] * of[p + 1]) * wfc[0];
            }
            dic[p] += acc;
        }
    }
}

namespace reference {

void matvec_acc(const double* w, int rows, int cols, const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

void conv1d_tanh_forward(const double* w, const double* bias, int filters,
                         const std::vector<const double*>& in, int positions, double* out) {
    const int channels = static_cast<int>(in.size());
    for (int f = 0; f < filters; ++f) {
        double* of = out + static_cast<std::size_t>(f) * positions;
        const double* wf = w + static_cast<std::size_t>(f) * channels * 3;
        for (int p = 0; p < positions; ++p) {
            double acc = bias[f];
            for (int c = 0; c < channels; ++c) {
                const double* wc = wf + c * 3;
                const double* ic = in[static_cast<std::size_t>(c)];
                if (p > 0) acc += wc[0] * ic[p - 1];
                acc += wc[1] * ic[p];
                if (p + 1 < positions) acc += wc[2] * ic[p + 1];
            }
            of[p] = std::tanh(acc);
        }
    }
}

}  // namespace reference

}  // namespace kernels
}  // namespace crowdnav
