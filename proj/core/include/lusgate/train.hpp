#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lusgate/network.hpp"

namespace lusgate::nn {

enum class OptimizerKind { Sgd, SgdMomentum };

struct Hyperparams {
    double learning_rate = 0.01;
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::SgdMomentum;
    double momentum = 0.9;
    // Per-class loss weights for classification training. Empty means
    // inverse-frequency weights computed from the labels.
    std::vector<double> class_weights;

    void validate() const;  // throws InvalidArgument
};

struct TrainResult {
    std::vector<double> loss_history;  // one mean-loss entry per epoch
    std::vector<std::string> warnings;
};

// SGD with optional momentum; velocity buffers persist across steps.
class SgdState {
public:
    explicit SgdState(const ModelParams& params);
    // w += beta*v - lr*grad/scale, applied per scalar
    void step(ModelParams& params, const ModelGrads& grads, const Hyperparams& hp, double scale);

private:
    std::vector<ParamBlock> velocity_;
};

// Classification training for cross-entropy (softmax head, labels are class
// indices) and binary-cross-entropy (sigmoid head, labels in {0,1}) networks.
// Deterministic for a fixed (params, inputs order, hyper.seed).
TrainResult train_supervised(ModelParams& params, const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels, const Hyperparams& hp);

// Target-tensor training for mean-squared-error networks.
TrainResult train_regression(ModelParams& params, const std::vector<Tensor>& inputs,
                             const std::vector<Tensor>& targets, const Hyperparams& hp);

// Per-item loss and fused pre-head gradient for a completed forward pass.
// For CrossEntropy/BinaryCrossEntropy the returned gradient is w.r.t. the
// head input; for MeanSquaredError it is w.r.t. the output (caller passes
// grad_at_prehead=false).
double classification_loss_grad(const Tensor& output, int label, double weight, LossKind loss, Tensor& grad);
double mse_loss_grad(const Tensor& output, const Tensor& target, Tensor& grad);

// Max relative error between analytic gradients and central finite
// differences over n_samples randomly sampled scalar weights:
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
double gradient_check(const ModelParams& params, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels, double epsilon, int n_samples = 120,
                      std::uint64_t seed = 1);
double gradient_check_regression(const ModelParams& params, const std::vector<Tensor>& inputs,
                                 const std::vector<Tensor>& targets, double epsilon, int n_samples = 120,
                                 std::uint64_t seed = 1);

// Replicates minority-class items until classes are balanced; appended
// indices are drawn deterministically from seed. Returns index order into
// the original arrays.
std::vector<int> oversample_minority(const std::vector<int>& labels, std::uint64_t seed);

}  // namespace lusgate::nn
