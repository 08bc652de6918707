#include <vector>

#include "doctest.h"

#include "bevlat/attack.hpp"
#include "bevlat/kernels.hpp"
#include "bevlat/warp.hpp"
#include "support/test_support.hpp"

using namespace bevlat;
using namespace bevlat::testing;

namespace {

const ExecPolicy kPolicies[] = {{Backend::kFast, 1}, {Backend::kFast, 0}, {Backend::kFast, 3}};
const ExecPolicy kReference{Backend::kReference, 1};

}  // namespace

TEST_CASE("fast kernels reproduce the reference bit for bit") {
    Rng rng(61);
    for (int trial = 0; trial < 4; ++trial) {
        const int agents = 1 + trial, channels = 2 + 2 * trial, rows = 5 + trial, cols = 9 - trial;
        std::vector<Tensor3> inputs;
        std::vector<const Tensor3*> ptrs;
        for (int n = 0; n < agents; ++n) inputs.push_back(random_tensor(rng, channels, rows, cols));
        for (const Tensor3& t : inputs) ptrs.push_back(&t);
        const int ego = trial % agents;

        Tensor3 ref_out, ref_w;
        kernels::fuse_forward(kReference, ptrs, ego, ref_out, &ref_w);
        const Tensor3 grad_out = random_tensor(rng, channels, rows, cols);
        std::vector<Tensor3> ref_grads(agents, Tensor3(channels, rows, cols));
        std::vector<Tensor3*> ref_slots;
        for (Tensor3& g : ref_grads) ref_slots.push_back(&g);
        kernels::fuse_backward(kReference, ptrs, ego, ref_w, grad_out, ref_slots);

        const HeadWeights head = random_head(rng, channels, 2, trial % 2 ? 3 : 1);
        Tensor3 ref_conv, ref_back;
        kernels::conv_forward(kReference, ref_out, head, ref_conv);
        const Tensor3 conv_grad = random_tensor(rng, head.out_channels(), rows, cols);
        kernels::conv_backward_input(kReference, conv_grad, head, ref_back);

        const auto inv = invert(AffineTransform2D::rotation_translation(0.2 * trial, 1.3, -0.7)).m;
        Tensor3 ref_warp;
        kernels::warp_bilinear(kReference, inputs[0], inv, ref_warp);

        for (const ExecPolicy& p : kPolicies) {
            Tensor3 out, w;
            kernels::fuse_forward(p, ptrs, ego, out, &w);
            CHECK(out.values() == ref_out.values());
            CHECK(w.values() == ref_w.values());

            std::vector<Tensor3> grads(agents, Tensor3(channels, rows, cols));
            std::vector<Tensor3*> slots;
            for (Tensor3& g : grads) slots.push_back(&g);
            kernels::fuse_backward(p, ptrs, ego, w, grad_out, slots);
            for (int n = 0; n < agents; ++n) CHECK(grads[n].values() == ref_grads[n].values());

            Tensor3 conv, back, warped;
            kernels::conv_forward(p, out, head, conv);
            CHECK(conv.values() == ref_conv.values());
            kernels::conv_backward_input(p, conv_grad, head, back);
            CHECK(back.values() == ref_back.values());
            kernels::warp_bilinear(p, inputs[0], inv, warped);
            CHECK(warped.values() == ref_warp.values());
        }
    }
}

TEST_CASE("perturbation gradient is identical under every execution policy") {
    Rng rng(62);
    const AttackScene scene = random_scene(rng, 3, 4, 6, 6);
    const HeadWeights head = random_head(rng, 4, 2, 3);
    const Tensor3 delta = random_tensor(rng, 4, 6, 6, -0.3, 0.3);
    const auto objective = make_objective(ObjectiveKind::kLatency, AttackConfig{});
    Tensor3 ref;
    const double ref_loss =
        objective_and_gradient(scene, delta, head, two_anchor_config(), *objective, &ref, kReference);
    for (const ExecPolicy& p : kPolicies) {
        Tensor3 g;
        CHECK(objective_and_gradient(scene, delta, head, two_anchor_config(), *objective, &g, p) == ref_loss);
        CHECK(g.values() == ref.values());
    }
}
