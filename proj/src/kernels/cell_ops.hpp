#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "bevlat/kernels.hpp"

namespace bevlat::kernels::detail {

constexpr int kMaxAgents = 16;

inline void fuse_cell(std::span<const Tensor3* const> in, int ego, std::size_t cell,
                      std::size_t plane, int channels, double scale, double* out,
                      double* weights) {
    const int n_agents = static_cast<int>(in.size());
    const double* ego_data = in[ego]->data();
    double logits[kMaxAgents];
    double peak = -INFINITY;
    for (int n = 0; n < n_agents; ++n) {
        const double* f = in[n]->data();
        double dot = 0.0;
        for (int c = 0; c < channels; ++c) dot += ego_data[c * plane + cell] * f[c * plane + cell];
        logits[n] = dot * scale;
        peak = std::max(peak, logits[n]);
    }
    double total = 0.0;
    for (int n = 0; n < n_agents; ++n) {
        logits[n] = std::exp(logits[n] - peak);
        total += logits[n];
    }
    for (int n = 0; n < n_agents; ++n) logits[n] /= total;
    for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int n = 0; n < n_agents; ++n) acc += logits[n] * in[n]->data()[c * plane + cell];
        out[c * plane + cell] = acc;
    }
    if (weights)
        for (int n = 0; n < n_agents; ++n) weights[n * plane + cell] = logits[n];
}

inline void fuse_backward_cell(std::span<const Tensor3* const> in, int ego, std::size_t cell,
                               std::size_t plane, int channels, double scale,
                               const double* weights, const double* g,
                               std::span<Tensor3* const> grads) {
    const int n_agents = static_cast<int>(in.size());
    double gamma[kMaxAgents];
    double mean_gamma = 0.0;
    for (int n = 0; n < n_agents; ++n) {
        const double* f = in[n]->data();
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) acc += g[c * plane + cell] * f[c * plane + cell];
        gamma[n] = acc;
        mean_gamma += weights[n * plane + cell] * acc;
    }
    const double* ego_data = in[ego]->data();
    for (int n = 0; n < n_agents; ++n) {
        const double wn = weights[n * plane + cell];
        const double dlogit = wn * (gamma[n] - mean_gamma) * scale;
        const double* f = in[n]->data();
        if (grads[n]) {
            double* gn = grads[n]->data();
            for (int c = 0; c < channels; ++c)
                gn[c * plane + cell] += wn * g[c * plane + cell] + dlogit * ego_data[c * plane + cell];
        }
        if (grads[ego]) {
            double* ge = grads[ego]->data();
            for (int c = 0; c < channels; ++c) ge[c * plane + cell] += dlogit * f[c * plane + cell];
        }
    }
}

inline void warp_cell(const Tensor3& in, const Affine& m, int i, int j, Tensor3& out) {
    const int rows = in.rows(), cols = in.cols();
    const double u = j + 0.5 - 0.5 * cols;
    const double v = i + 0.5 - 0.5 * rows;
    const double us = m[0] * u + m[1] * v + m[2];
    const double vs = m[3] * u + m[4] * v + m[5];
    const double fc = us - 0.5 + 0.5 * cols;
    const double fr = vs - 0.5 + 0.5 * rows;
    const double c0f = std::floor(fc), r0f = std::floor(fr);
    const double ax = fc - c0f, ay = fr - r0f;
    for (int ch = 0; ch < in.channels(); ++ch) out.at(ch, i, j) = 0.0;
    if (!(r0f > -2.0 && r0f < rows && c0f > -2.0 && c0f < cols)) return;
    const int r0 = static_cast<int>(r0f), c0 = static_cast<int>(c0f);
    const double wts[4] = {(1 - ay) * (1 - ax), (1 - ay) * ax, ay * (1 - ax), ay * ax};
    const int rr[4] = {r0, r0, r0 + 1, r0 + 1};
    const int cc[4] = {c0, c0 + 1, c0, c0 + 1};
    for (int k = 0; k < 4; ++k) {
        if (wts[k] == 0.0 || rr[k] < 0 || rr[k] >= rows || cc[k] < 0 || cc[k] >= cols) continue;
        for (int ch = 0; ch < in.channels(); ++ch) out.at(ch, i, j) += wts[k] * in.at(ch, rr[k], cc[k]);
    }
}

}  // namespace bevlat::kernels::detail
