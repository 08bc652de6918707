#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "bevlat/kernels.hpp"
#include "bevlat/metrics.hpp"
#include "bevlat/random.hpp"
#include "bevlat/scenario.hpp"
#include "bevlat/warp.hpp"

using namespace bevlat;

namespace {

Tensor3 random_tensor(Rng& rng, int c, int h, int w) {
    Tensor3 t(c, h, w);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

HeadWeights random_head(Rng& rng, int in_channels, int anchors, int kernel) {
    HeadWeights head;
    head.in_channels = in_channels;
    head.anchors = anchors;
    head.kernel = kernel;
    head.weight.resize(static_cast<std::size_t>(head.out_channels()) * in_channels * kernel * kernel);
    head.bias.resize(head.out_channels());
    for (double& v : head.weight) v = rng.uniform(-0.2, 0.2);
    for (double& v : head.bias) v = rng.uniform(-0.2, 0.2);
    return head;
}

bool identical(const Tensor3& a, const Tensor3& b) { return a.same_shape(b) && a.values() == b.values(); }

struct Row {
    std::string kernel;
    double reference = 0, fast_serial = 0, fast_parallel = 0;
    bool equal = true;
};

// Times `run(policy, out)` under the three policies and checks that every
// policy writes the same tensor.
Row bench(const std::string& name, const std::function<void(ExecPolicy, Tensor3&)>& run) {
    const ExecPolicy policies[] = {{Backend::kReference, 1}, {Backend::kFast, 1}, {Backend::kFast, 0}};
    Tensor3 outputs[3];
    double medians[3];
    for (int p = 0; p < 3; ++p) {
        run(policies[p], outputs[p]);
        medians[p] = measure_latency([&] { run(policies[p], outputs[p]); }, 2, 7).median;
    }
    return {name, medians[0], medians[1], medians[2],
            identical(outputs[0], outputs[1]) && identical(outputs[0], outputs[2])};
}

}  // namespace

int main(int argc, char** argv) {
    const int size = argc > 1 ? std::stoi(argv[1]) : 128;
    const int agents = 3, channels = kFeatureChannels;
    Rng rng(7);

    std::vector<Tensor3> inputs;
    for (int n = 0; n < agents; ++n) inputs.push_back(random_tensor(rng, channels, size, size));
    std::vector<const Tensor3*> input_ptrs;
    for (const Tensor3& t : inputs) input_ptrs.push_back(&t);
    const HeadWeights head = random_head(rng, channels, 2, 3);
    const Tensor3 grad_out = random_tensor(rng, head.out_channels(), size, size);
    const Tensor3 grad_fused = random_tensor(rng, channels, size, size);
    const auto transform = invert(AffineTransform2D::rotation_translation(0.3, 2.7, -1.4)).m;

    Tensor3 weights;
    Tensor3 fused;
    kernels::fuse_forward({Backend::kReference, 1}, input_ptrs, 0, fused, &weights);

    std::vector<Row> rows;
    rows.push_back(bench("fuse_forward", [&](ExecPolicy e, Tensor3& out) {
        kernels::fuse_forward(e, input_ptrs, 0, out, nullptr);
    }));
    rows.push_back(bench("fuse_backward", [&](ExecPolicy e, Tensor3& out) {
        std::vector<Tensor3> grads(agents, Tensor3(channels, size, size));
        std::vector<Tensor3*> grad_ptrs;
        for (Tensor3& g : grads) grad_ptrs.push_back(&g);
        kernels::fuse_backward(e, input_ptrs, 0, weights, grad_fused, grad_ptrs);
        out = std::move(grads[1]);
    }));
    rows.push_back(bench("conv_forward", [&](ExecPolicy e, Tensor3& out) {
        kernels::conv_forward(e, fused, head, out);
    }));
    rows.push_back(bench("conv_backward_input", [&](ExecPolicy e, Tensor3& out) {
        kernels::conv_backward_input(e, grad_out, head, out);
    }));
    rows.push_back(bench("warp_bilinear", [&](ExecPolicy e, Tensor3& out) {
        kernels::warp_bilinear(e, inputs[1], transform, out);
    }));

    std::printf("grid %dx%d, %d channels, %d agents, %d OpenMP threads\n", size, size, channels, agents,
                omp_get_max_threads());
    std::printf("%-22s %12s %12s %12s %8s %6s\n", "kernel", "reference ms", "fast/1 ms", "fast/omp ms", "speedup",
                "equal");
    bool all_equal = true;
    for (const Row& r : rows) {
        std::printf("%-22s %12.3f %12.3f %12.3f %7.2fx %6s\n", r.kernel.c_str(), r.reference * 1e3,
                    r.fast_serial * 1e3, r.fast_parallel * 1e3, r.reference / r.fast_parallel,
                    r.equal ? "yes" : "NO");
        all_equal = all_equal && r.equal;
    }
    return all_equal ? 0 : 1;
}
