#include "bevlat/errors.hpp"
#include "variants.hpp"
#include "cell_ops.hpp"

namespace bevlat::kernels {

namespace {

void check_inputs(std::span<const Tensor3* const> inputs, int ego) {
    if (inputs.empty()) throw StructuralError("fusion needs at least one feature map");
    if (inputs.size() > static_cast<std::size_t>(detail::kMaxAgents))
        throw ValidationError("fusion supports at most 16 agents");
    if (ego < 0 || ego >= static_cast<int>(inputs.size()))
        throw ValidationError("ego index out of range");
    for (const Tensor3* t : inputs)
        if (!t->same_shape(*inputs[0])) throw StructuralError("feature maps differ in shape");
}

}  // namespace

void fuse_forward(ExecPolicy exec, std::span<const Tensor3* const> inputs, int ego, Tensor3& out,
                  Tensor3* weights) {
    check_inputs(inputs, ego);
    const Tensor3& e = *inputs[ego];
    if (!out.same_shape(e)) out = Tensor3(e.channels(), e.rows(), e.cols());
    if (weights && (weights->channels() != static_cast<int>(inputs.size()) ||
                    weights->rows() != e.rows() || weights->cols() != e.cols()))
        *weights = Tensor3(static_cast<int>(inputs.size()), e.rows(), e.cols());
    if (exec.backend == Backend::kReference)
        reference::fuse_forward(inputs, ego, out, weights);
    else
        fast::fuse_forward(exec.threads, inputs, ego, out, weights);
}

void fuse_backward(ExecPolicy exec, std::span<const Tensor3* const> inputs, int ego,
                   const Tensor3& weights, const Tensor3& grad_out,
                   std::span<Tensor3* const> grads) {
    check_inputs(inputs, ego);
    if (grads.size() != inputs.size()) throw StructuralError("one gradient slot per input required");
    if (!grad_out.same_shape(*inputs[ego])) throw StructuralError("fusion gradient shape mismatch");
    for (Tensor3* g : grads)
        if (g && !g->same_shape(*inputs[ego])) throw StructuralError("gradient buffer shape mismatch");
    if (exec.backend == Backend::kReference)
        reference::fuse_backward(inputs, ego, weights, grad_out, grads);
    else
        fast::fuse_backward(exec.threads, inputs, ego, weights, grad_out, grads);
}

void conv_forward(ExecPolicy exec, const Tensor3& in, const HeadWeights& head, Tensor3& out) {
    head.validate();
    if (in.channels() != head.in_channels)
        throw StructuralError("head expects " + std::to_string(head.in_channels) +
                              " input channels, got " + std::to_string(in.channels()));
    if (out.channels() != head.out_channels() || out.rows() != in.rows() || out.cols() != in.cols())
        out = Tensor3(head.out_channels(), in.rows(), in.cols());
    if (exec.backend == Backend::kReference)
        reference::conv_forward(in, head, out);
    else
        fast::conv_forward(exec.threads, in, head, out);
}

void conv_backward_input(ExecPolicy exec, const Tensor3& grad_out, const HeadWeights& head,
                         Tensor3& grad_in) {
    head.validate();
    if (grad_out.channels() != head.out_channels())
        throw StructuralError("head gradient has wrong channel count");
    if (grad_in.channels() != head.in_channels || grad_in.rows() != grad_out.rows() ||
        grad_in.cols() != grad_out.cols())
        grad_in = Tensor3(head.in_channels, grad_out.rows(), grad_out.cols());
    if (exec.backend == Backend::kReference)
        reference::conv_backward_input(grad_out, head, grad_in);
    else
        fast::conv_backward_input(exec.threads, grad_out, head, grad_in);
}

void warp_bilinear(ExecPolicy exec, const Tensor3& in, const Affine& inverse, Tensor3& out) {
    if (!out.same_shape(in)) out = Tensor3(in.channels(), in.rows(), in.cols());
    if (exec.backend == Backend::kReference)
        reference::warp_bilinear(in, inverse, out);
    else
        fast::warp_bilinear(exec.threads, in, inverse, out);
}

}  // namespace bevlat::kernels
