#pragma once

#include "bevlat/kernels.hpp"

namespace bevlat::kernels {

namespace reference {
void fuse_forward(std::span<const Tensor3* const> inputs, int ego, Tensor3& out, Tensor3* weights);
void fuse_backward(std::span<const Tensor3* const> inputs, int ego, const Tensor3& weights,
                   const Tensor3& grad_out, std::span<Tensor3* const> grads);
void conv_forward(const Tensor3& in, const HeadWeights& head, Tensor3& out);
void conv_backward_input(const Tensor3& grad_out, const HeadWeights& head, Tensor3& grad_in);
void warp_bilinear(const Tensor3& in, const Affine& inverse, Tensor3& out);
}  // namespace reference

namespace fast {
void fuse_forward(int threads, std::span<const Tensor3* const> inputs, int ego, Tensor3& out,
                  Tensor3* weights);
void fuse_backward(int threads, std::span<const Tensor3* const> inputs, int ego,
                   const Tensor3& weights, const Tensor3& grad_out,
                   std::span<Tensor3* const> grads);
void conv_forward(int threads, const Tensor3& in, const HeadWeights& head, Tensor3& out);
void conv_backward_input(int threads, const Tensor3& grad_out, const HeadWeights& head,
                         Tensor3& grad_in);
void warp_bilinear(int threads, const Tensor3& in, const Affine& inverse, Tensor3& out);
}  // namespace fast

}  // namespace bevlat::kernels
