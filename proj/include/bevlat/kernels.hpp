#pragma once

#include <array>
#include <span>

#include "bevlat/pipeline.hpp"
#include "bevlat/tensor.hpp"

// Grid kernels in two flavours. The reference versions are plain per-cell
// loops kept as the test oracle; the fast versions reorder loops for
// contiguous access and split rows or channels across OpenMP threads. Both
// accumulate in the same order, so their outputs agree bit for bit.
namespace bevlat::kernels {

using Affine = std::array<double, 9>;  // row-major 3x3, centred pixel coordinates

// Attention fusion. `weights`, when given, receives the per-cell softmax
// weights as an [N][H][W] tensor for the backward pass.
void fuse_forward(ExecPolicy exec, std::span<const Tensor3* const> inputs, int ego,
                  Tensor3& out, Tensor3* weights);

// Accumulates d(loss)/d(input n) into grads[n] (entries may be null).
void fuse_backward(ExecPolicy exec, std::span<const Tensor3* const> inputs, int ego,
                   const Tensor3& weights, const Tensor3& grad_out,
                   std::span<Tensor3* const> grads);

void conv_forward(ExecPolicy exec, const Tensor3& in, const HeadWeights& head, Tensor3& out);

// Overwrites grad_in with the input gradient of conv_forward.
void conv_backward_input(ExecPolicy exec, const Tensor3& grad_out, const HeadWeights& head,
                         Tensor3& grad_in);

// out(p) = bilinear sample of `in` at inverse * p, zero outside the grid.
void warp_bilinear(ExecPolicy exec, const Tensor3& in, const Affine& inverse, Tensor3& out);

}  // namespace bevlat::kernels
