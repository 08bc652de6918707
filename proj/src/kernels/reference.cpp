#include <cmath>

#include "cell_ops.hpp"
#include "variants.hpp"

namespace bevlat::kernels::reference {

void fuse_forward(std::span<const Tensor3* const> inputs, int ego, Tensor3& out, Tensor3* weights) {
    const Tensor3& e = *inputs[ego];
    const double scale = 1.0 / std::sqrt(static_cast<double>(e.channels()));
    for (std::size_t cell = 0; cell < e.plane(); ++cell)
        detail::fuse_cell(inputs, ego, cell, e.plane(), e.channels(), scale, out.data(),
                          weights ? weights->data() : nullptr);
}

void fuse_backward(std::span<const Tensor3* const> inputs, int ego, const Tensor3& weights,
                   const Tensor3& grad_out, std::span<Tensor3* const> grads) {
    const Tensor3& e = *inputs[ego];
    const double scale = 1.0 / std::sqrt(static_cast<double>(e.channels()));
    for (std::size_t cell = 0; cell < e.plane(); ++cell)
        detail::fuse_backward_cell(inputs, ego, cell, e.plane(), e.channels(), scale,
                                   weights.data(), grad_out.data(), grads);
}

void conv_forward(const Tensor3& in, const HeadWeights& head, Tensor3& out) {
    const int r = head.kernel / 2;
    for (int o = 0; o < head.out_channels(); ++o)
        for (int i = 0; i < in.rows(); ++i)
            for (int j = 0; j < in.cols(); ++j) {
                double s = head.bias[o];
                for (int c = 0; c < head.in_channels; ++c)
                    for (int ky = 0; ky < head.kernel; ++ky)
                        for (int kx = 0; kx < head.kernel; ++kx) {
                            const int ii = i + ky - r, jj = j + kx - r;
                            if (ii < 0 || ii >= in.rows() || jj < 0 || jj >= in.cols()) continue;
                            s += head.w(o, c, ky, kx) * in.at(c, ii, jj);
                        }
                out.at(o, i, j) = s;
            }
}

void conv_backward_input(const Tensor3& grad_out, const HeadWeights& head, Tensor3& grad_in) {
    const int r = head.kernel / 2;
    for (int c = 0; c < head.in_channels; ++c)
        for (int p = 0; p < grad_in.rows(); ++p)
            for (int q = 0; q < grad_in.cols(); ++q) {
                double s = 0.0;
                for (int o = 0; o < head.out_channels(); ++o)
                    for (int ky = 0; ky < head.kernel; ++ky)
                        for (int kx = 0; kx < head.kernel; ++kx) {
                            const int i = p - ky + r, j = q - kx + r;
                            if (i < 0 || i >= grad_out.rows() || j < 0 || j >= grad_out.cols()) continue;
                            s += head.w(o, c, ky, kx) * grad_out.at(o, i, j);
                        }
                grad_in.at(c, p, q) = s;
            }
}

void warp_bilinear(const Tensor3& in, const Affine& inverse, Tensor3& out) {
    for (int i = 0; i < in.rows(); ++i)
        for (int j = 0; j < in.cols(); ++j) detail::warp_cell(in, inverse, i, j, out);
}

}  // namespace bevlat::kernels::reference
