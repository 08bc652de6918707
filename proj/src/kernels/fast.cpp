#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cell_ops.hpp"
#include "variants.hpp"

namespace bevlat::kernels::fast {

namespace {

int team_size(int threads) {
#ifdef _OPENMP
    return threads > 0 ? threads : omp_get_max_threads();
#else
    (void)threads;
    return 1;
#endif
}

}  // namespace

void fuse_forward(int threads, std::span<const Tensor3* const> inputs, int ego, Tensor3& out,
                  Tensor3* weights) {
    const Tensor3& e = *inputs[ego];
    const int n_agents = static_cast<int>(inputs.size());
    const int rows = e.rows(), cols = e.cols(), channels = e.channels();
    const std::size_t plane = e.plane();
    const double scale = 1.0 / std::sqrt(static_cast<double>(channels));

#pragma omp parallel num_threads(team_size(threads))
    {
        std::vector<double> logit(static_cast<std::size_t>(n_agents) * cols);
        std::vector<double> peak(cols), total(cols);
#pragma omp for schedule(static)
        for (int i = 0; i < rows; ++i) {
            const std::size_t base = static_cast<std::size_t>(i) * cols;
            std::fill(logit.begin(), logit.end(), 0.0);
            for (int n = 0; n < n_agents; ++n) {
                double* dst = logit.data() + static_cast<std::size_t>(n) * cols;
                const double* f = inputs[n]->data() + base;
                const double* g = e.data() + base;
                for (int c = 0; c < channels; ++c)
                    for (int j = 0; j < cols; ++j) dst[j] += g[c * plane + j] * f[c * plane + j];
            }
            std::fill(peak.begin(), peak.end(), -INFINITY);
            for (int n = 0; n < n_agents; ++n)
                for (int j = 0; j < cols; ++j) {
                    double& l = logit[static_cast<std::size_t>(n) * cols + j];
                    l *= scale;
                    peak[j] = std::max(peak[j], l);
                }
            std::fill(total.begin(), total.end(), 0.0);
            for (int n = 0; n < n_agents; ++n)
                for (int j = 0; j < cols; ++j) {
                    double& l = logit[static_cast<std::size_t>(n) * cols + j];
                    l = std::exp(l - peak[j]);
                    total[j] += l;
                }
            for (int n = 0; n < n_agents; ++n)
                for (int j = 0; j < cols; ++j) logit[static_cast<std::size_t>(n) * cols + j] /= total[j];
            for (int c = 0; c < channels; ++c) {
                double* dst = out.data() + c * plane + base;
                std::fill(dst, dst + cols, 0.0);
                for (int n = 0; n < n_agents; ++n) {
                    const double* f = inputs[n]->data() + c * plane + base;
                    const double* wn = logit.data() + static_cast<std::size_t>(n) * cols;
                    for (int j = 0; j < cols; ++j) dst[j] += wn[j] * f[j];
                }
            }
            if (weights)
                for (int n = 0; n < n_agents; ++n)
                    std::copy_n(logit.data() + static_cast<std::size_t>(n) * cols, cols,
                                weights->data() + n * plane + base);
        }
    }
}

void fuse_backward(int threads, std::span<const Tensor3* const> inputs, int ego,
                   const Tensor3& weights, const Tensor3& grad_out,
                   std::span<Tensor3* const> grads) {
    const Tensor3& e = *inputs[ego];
    const double scale = 1.0 / std::sqrt(static_cast<double>(e.channels()));
    const int rows = e.rows(), cols = e.cols();
#pragma omp parallel for schedule(static) num_threads(team_size(threads))
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            detail::fuse_backward_cell(inputs, ego, static_cast<std::size_t>(i) * cols + j, e.plane(),
                                       e.channels(), scale, weights.data(), grad_out.data(), grads);
}

// Both conv kernels walk output rows in the outer loop so one row of every
// output channel plus the contributing input rows stay in L1.
void conv_forward(int threads, const Tensor3& in, const HeadWeights& head, Tensor3& out) {
    const int r = head.kernel / 2;
    const int rows = in.rows(), cols = in.cols();
#pragma omp parallel for schedule(static) num_threads(team_size(threads))
    for (int i = 0; i < rows; ++i) {
        for (int o = 0; o < head.out_channels(); ++o) {
            double* d = out.channel(o) + static_cast<std::size_t>(i) * cols;
            std::fill(d, d + cols, head.bias[o]);
            for (int c = 0; c < head.in_channels; ++c)
                for (int ky = 0; ky < head.kernel; ++ky) {
                    const int ii = i + ky - r;
                    if (ii < 0 || ii >= rows) continue;
                    const double* src = in.channel(c) + static_cast<std::size_t>(ii) * cols;
                    for (int kx = 0; kx < head.kernel; ++kx) {
                        const double w = head.w(o, c, ky, kx);
                        const int dx = kx - r;
                        const int j0 = std::max(0, -dx), j1 = std::min(cols, cols - dx);
                        const double* s = src + dx;
                        for (int j = j0; j < j1; ++j) d[j] += w * s[j];
                    }
                }
        }
    }
}

void conv_backward_input(int threads, const Tensor3& grad_out, const HeadWeights& head,
                         Tensor3& grad_in) {
    const int r = head.kernel / 2;
    const int rows = grad_in.rows(), cols = grad_in.cols();
#pragma omp parallel for schedule(static) num_threads(team_size(threads))
    for (int p = 0; p < rows; ++p) {
        for (int c = 0; c < head.in_channels; ++c) {
            double* d = grad_in.channel(c) + static_cast<std::size_t>(p) * cols;
            std::fill(d, d + cols, 0.0);
            for (int o = 0; o < head.out_channels(); ++o)
                for (int ky = 0; ky < head.kernel; ++ky) {
                    const int i = p - ky + r;
                    if (i < 0 || i >= rows) continue;
                    const double* src = grad_out.channel(o) + static_cast<std::size_t>(i) * cols;
                    for (int kx = 0; kx < head.kernel; ++kx) {
                        const double w = head.w(o, c, ky, kx);
                        const int dx = r - kx;
                        const int q0 = std::max(0, -dx), q1 = std::min(cols, cols - dx);
                        const double* s = src + dx;
                        for (int q = q0; q < q1; ++q) d[q] += w * s[q];
                    }
                }
        }
    }
}

void warp_bilinear(int threads, const Tensor3& in, const Affine& inverse, Tensor3& out) {
    const int rows = in.rows(), cols = in.cols();
#pragma omp parallel for schedule(static) num_threads(team_size(threads))
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) detail::warp_cell(in, inverse, i, j, out);
}

}  // namespace bevlat::kernels::fast
