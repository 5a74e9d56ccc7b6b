#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lusgate/network_spec.hpp"
#include "lusgate/tensor.hpp"

namespace lusgate::nn {

struct ParamBlock {
    std::vector<double> w;  // conv: [ky][kx][ic][oc]; dense: [in][out]
    std::vector<double> b;
    bool empty() const { return w.empty() && b.empty(); }
};

struct TrainMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_loss = 0.0;
    std::int64_t n_train = 0;  // training set size, feeds prior estimation downstream
};

// Immutable after training; safe to share across threads for inference.
struct ModelParams {
    NetworkSpec spec;
    std::uint64_t spec_hash = 0;
    std::vector<ParamBlock> blocks;  // one per layer, empty for non-trainable layers
    TrainMeta meta;

    bool all_finite() const;
    void check_matches_spec() const;  // throws SpecError on shape mismatch
};

// Deterministic initialization: He-style normal fan-in scaling ahead of relu,
// Xavier-style uniform ahead of sigmoid/tanh/heads; zero biases.
ModelParams build_network(const NetworkSpec& spec, std::uint64_t seed);

// Gradient accumulator matching a model's block layout.
struct ModelGrads {
    std::vector<ParamBlock> blocks;
    void zero();
};
ModelGrads make_grads(const ModelParams& params);

// Per-call workspace bound to one immutable ModelParams. Holds activation and
// patch caches between forward and backward, so one Executor serves one
// item at a time; create one per thread for concurrent inference.
class Executor {
public:
    explicit Executor(const ModelParams& params);

    // Returns the post-head output. Throws InvalidArgument on shape mismatch
    // and NumericError (naming the layer) on non-finite intermediates.
    const Tensor& forward(const Tensor& input);

    // Backpropagates from `grad`. With grad_at_prehead the gradient is taken
    // w.r.t. the pre-head values (fused softmax/sigmoid losses); otherwise
    // w.r.t. the network output. Accumulates parameter gradients into `sink`
    // when non-null and returns the gradient w.r.t. the input.
    Tensor backward(const Tensor& grad, bool grad_at_prehead, ModelGrads* sink);

    // Backward with the guided-relu rule: relu passes only positive gradients
    // through positively-activated units.
    Tensor backward_guided(const Tensor& grad, bool grad_at_prehead);

    // Capture dLoss/d(output of layer index) during the next backward call.
    void capture_gradient_at(int layer_index) { capture_at_ = layer_index; }
    const Tensor& captured_gradient() const { return captured_; }

    const Tensor& activation(int layer_index) const;  // forward output of layer_index
    const Tensor& prehead() const;                    // input to the head layer

    // Fingerprint of the piecewise-linear region the last forward landed in
    // (relu sign pattern + maxpool argmax choices). Two inputs in the same
    // region see a locally smooth loss; finite differences straddling a
    // region change do not estimate the derivative.
    std::uint64_t activation_pattern() const;

private:
    Tensor run_backward(const Tensor& grad, bool grad_at_prehead, ModelGrads* sink, bool guided);

    const ModelParams& params_;
    std::vector<Shape> shapes_;
    std::vector<Tensor> acts_;              // acts_[0] = input, acts_[i+1] = output of layer i
    std::vector<std::vector<double>> im2col_;  // per conv layer, cached patches
    std::vector<std::vector<int>> pool_argmax_;
    int capture_at_ = -1;
    Tensor captured_;
    bool have_forward_ = false;
};

// Convenience batch forward with a fresh executor; output order matches input order.
std::vector<Tensor> forward_batch(const ModelParams& params, const std::vector<Tensor>& inputs);

}  // namespace lusgate::nn
