#include "lusgate/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lusgate/errors.hpp"
#include "lusgate/rng.hpp"

namespace lusgate::nn {

namespace {
constexpr double kProbFloor = 1e-12;
}

void Hyperparams::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("learning_rate must be finite and >= 0");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    for (double w : class_weights)
        if (!(w > 0.0)) throw InvalidArgument("class weights must be positive");
}

SgdState::SgdState(const ModelParams& params) {
    velocity_.resize(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        velocity_[i].w.assign(params.blocks[i].w.size(), 0.0);
        velocity_[i].b.assign(params.blocks[i].b.size(), 0.0);
    }
}

void SgdState::step(ModelParams& params, const ModelGrads& grads, const Hyperparams& hp, double scale) {
    double beta = hp.optimizer == OptimizerKind::SgdMomentum ? hp.momentum : 0.0;
    double lr = hp.learning_rate / scale;
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        auto update = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& v) {
            for (std::size_t j = 0; j < w.size(); ++j) {
                v[j] = beta * v[j] - lr * g[j];
                w[j] += v[j];
            }
        };
        update(params.blocks[i].w, grads.blocks[i].w, velocity_[i].w);
        update(params.blocks[i].b, grads.blocks[i].b, velocity_[i].b);
    }
}

double classification_loss_grad(const Tensor& output, int label, double weight, LossKind loss, Tensor& grad) {
    if (grad.size() != output.size()) grad = Tensor(output.h, output.w, output.c);
    if (loss == LossKind::CrossEntropy) {
        if (label < 0 || label >= output.size()) throw InvalidArgument("label out of range for head");
        for (int j = 0; j < output.size(); ++j) grad.v[j] = weight * output.v[j];
        grad.v[label] -= weight;
        return -weight * std::log(std::max(output.v[label], kProbFloor));
    }
    if (loss == LossKind::BinaryCrossEntropy || loss == LossKind::AdvDiscriminator ||
        loss == LossKind::AdvGenerator) {
        // sigmoid head; target broadcast over all output elements
        double t = static_cast<double>(label);
        double n = static_cast<double>(output.size());
        double l = 0.0;
        for (int j = 0; j < output.size(); ++j) {
            double p = output.v[j];
            grad.v[j] = weight * (p - t) / n;
            l += -(t * std::log(std::max(p, kProbFloor)) + (1.0 - t) * std::log(std::max(1.0 - p, kProbFloor)));
        }
        return weight * l / n;
    }
    throw InvalidArgument("classification training requires a cross-entropy or binary-cross-entropy network");
}

double mse_loss_grad(const Tensor& output, const Tensor& target, Tensor& grad) {
    if (!output.same_shape(target)) throw InvalidArgument("target shape does not match output");
    if (grad.size() != output.size()) grad = Tensor(output.h, output.w, output.c);
    double n = static_cast<double>(output.size());
    double l = 0.0;
    for (int j = 0; j < output.size(); ++j) {
        double d = output.v[j] - target.v[j];
        grad.v[j] = 2.0 * d / n;
        l += d * d;
    }
    return l / n;
}

namespace {

std::vector<double> resolve_class_weights(const Hyperparams& hp, const std::vector<int>& labels,
                                          int n_classes, std::vector<std::string>& warnings) {
    if (!hp.class_weights.empty()) {
        if (static_cast<int>(hp.class_weights.size()) < n_classes)
            throw InvalidArgument("class_weights shorter than class count");
        return hp.class_weights;
    }
    std::vector<std::int64_t> counts(n_classes, 0);
    for (int l : labels) ++counts[l];
    int present = 0;
    for (auto c : counts)
        if (c > 0) ++present;
    if (present < 2) warnings.push_back("single-class dataset: training proceeds but cannot discriminate");
    // inverse-frequency: weight_c = n / (k * count_c)
    std::vector<double> w(n_classes, 1.0);
    double n = static_cast<double>(labels.size());
    for (int c = 0; c < n_classes; ++c)
        if (counts[c] > 0) w[c] = n / (static_cast<double>(present) * static_cast<double>(counts[c]));
    return w;
}

}  // namespace

TrainResult train_supervised(ModelParams& params, const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels, const Hyperparams& hp) {
    hp.validate();
    if (inputs.empty()) throw InvalidArgument("empty training dataset");
    if (inputs.size() != labels.size()) throw InvalidArgument("inputs/labels length mismatch");
    LossKind loss = params.spec.loss;
    if (loss != LossKind::CrossEntropy && loss != LossKind::BinaryCrossEntropy)
        throw InvalidArgument("train_supervised requires a cross-entropy or binary-cross-entropy network");

    int head_units = params.spec.output_shape().size();
    int n_classes = loss == LossKind::CrossEntropy ? head_units : 2;
    for (int l : labels)
        if (l < 0 || l >= n_classes) throw InvalidArgument("label out of range");

    TrainResult result;
    std::vector<double> cls_w = resolve_class_weights(hp, labels, n_classes, result.warnings);

    Executor ex(params);
    SgdState opt(params);
    ModelGrads grads = make_grads(params);
    Rng rng(splitmix64(hp.seed ^ 0x747261696e0001ull));

    std::vector<int> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    Tensor item_grad;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t end = std::min(pos + static_cast<std::size_t>(hp.batch_size), order.size());
            grads.zero();
            for (std::size_t bi = pos; bi < end; ++bi) {
                int idx = order[bi];
                const Tensor& out = ex.forward(inputs[idx]);
                epoch_loss += classification_loss_grad(out, labels[idx], cls_w[labels[idx]], loss, item_grad);
                ex.backward(item_grad, true, &grads);
            }
            opt.step(params, grads, hp, static_cast<double>(end - pos));
            pos = end;
        }
        epoch_loss /= static_cast<double>(inputs.size());
        if (!std::isfinite(epoch_loss))
            throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
        result.loss_history.push_back(epoch_loss);
    }
    params.meta.epochs = hp.epochs;
    params.meta.seed = hp.seed;
    params.meta.final_loss = result.loss_history.back();
    params.meta.n_train = static_cast<std::int64_t>(inputs.size());
    return result;
}

TrainResult train_regression(ModelParams& params, const std::vector<Tensor>& inputs,
                             const std::vector<Tensor>& targets, const Hyperparams& hp) {
    hp.validate();
    if (inputs.empty()) throw InvalidArgument("empty training dataset");
    if (inputs.size() != targets.size()) throw InvalidArgument("inputs/targets length mismatch");
    if (params.spec.loss != LossKind::MeanSquaredError)
        throw InvalidArgument("train_regression requires a mean-squared-error network");

    TrainResult result;
    Executor ex(params);
    SgdState opt(params);
    ModelGrads grads = make_grads(params);
    Rng rng(splitmix64(hp.seed ^ 0x747261696e0002ull));

    std::vector<int> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    Tensor item_grad;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t end = std::min(pos + static_cast<std::size_t>(hp.batch_size), order.size());
            grads.zero();
            for (std::size_t bi = pos; bi < end; ++bi) {
                int idx = order[bi];
                const Tensor& out = ex.forward(inputs[idx]);
                epoch_loss += mse_loss_grad(out, targets[idx], item_grad);
                ex.backward(item_grad, false, &grads);
            }
            opt.step(params, grads, hp, static_cast<double>(end - pos));
            pos = end;
        }
        epoch_loss /= static_cast<double>(inputs.size());
        if (!std::isfinite(epoch_loss))
            throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
        result.loss_history.push_back(epoch_loss);
    }
    params.meta.epochs = hp.epochs;
    params.meta.seed = hp.seed;
    params.meta.final_loss = result.loss_history.back();
    params.meta.n_train = static_cast<std::int64_t>(inputs.size());
    return result;
}

namespace {

// flat view over every trainable scalar, same walk order for params and grads
struct FlatWeights {
    std::vector<std::pair<std::vector<double>*, std::size_t>> slots;

    explicit FlatWeights(std::vector<ParamBlock>& blocks) {
        for (auto& blk : blocks) {
            if (!blk.w.empty()) slots.push_back({&blk.w, blk.w.size()});
            if (!blk.b.empty()) slots.push_back({&blk.b, blk.b.size()});
        }
    }
    std::size_t total() const {
        std::size_t n = 0;
        for (auto& s : slots) n += s.second;
        return n;
    }
    double& at(std::size_t i) {
        for (auto& s : slots) {
            if (i < s.second) return (*s.first)[i];
            i -= s.second;
        }
        throw InvalidArgument("flat weight index out of range");
    }
};

// LossFn: (params, grad sink or null, pattern out or null) -> batch mean loss.
// Samples whose ±ε interval straddles a relu/maxpool region boundary are
// resampled: the loss has a kink there and the central difference does not
// estimate the derivative.
template <typename LossFn>
double check_impl(const ModelParams& params, LossFn batch_loss_and_grads, double epsilon, int n_samples,
                  std::uint64_t seed) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    ModelParams work = params;
    ModelGrads analytic = make_grads(work);
    double base = batch_loss_and_grads(work, &analytic, nullptr);
    if (!std::isfinite(base)) throw NumericError("loss is non-finite at the evaluation point");

    FlatWeights flat(work.blocks);
    FlatWeights flat_grads_view(analytic.blocks);

    std::size_t n_weights = flat.total();
    Rng rng(splitmix64(seed ^ 0x67636865636b01ull));
    double worst = 0.0;
    int budget = 20 * n_samples;  // cap on resampling, not on accepted samples
    for (int s = 0; s < n_samples && budget > 0; ++s) {
        --budget;
        std::size_t idx = static_cast<std::size_t>(rng.below(n_weights));
        double& wref = flat.at(idx);
        double saved = wref;
        std::uint64_t pat_p = 0, pat_m = 0;
        wref = saved + epsilon;
        double lp = batch_loss_and_grads(work, nullptr, &pat_p);
        wref = saved - epsilon;
        double lm = batch_loss_and_grads(work, nullptr, &pat_m);
        wref = saved;
        if (pat_p != pat_m) {
            --s;
            continue;
        }
        double numeric = (lp - lm) / (2.0 * epsilon);
        double ana = flat_grads_view.at(idx);
        double rel = std::fabs(ana - numeric) / std::max({std::fabs(ana), std::fabs(numeric), 1e-8});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace

double gradient_check(const ModelParams& params, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels, double epsilon, int n_samples, std::uint64_t seed) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw InvalidArgument("gradient_check requires a nonempty labelled batch");
    LossKind loss = params.spec.loss;
    auto fn = [&](ModelParams& p, ModelGrads* sink, std::uint64_t* pattern) {
        Executor ex(p);
        Tensor g;
        double total = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const Tensor& out = ex.forward(inputs[i]);
            total += classification_loss_grad(out, labels[i], 1.0, loss, g);
            if (pattern) *pattern = *pattern * 0x9e3779b97f4a7c15ull + ex.activation_pattern();
            if (sink) {
                for (double& x : g.v) x /= static_cast<double>(inputs.size());
                ex.backward(g, true, sink);
            }
        }
        return total / static_cast<double>(inputs.size());
    };
    return check_impl(params, fn, epsilon, n_samples, seed);
}

double gradient_check_regression(const ModelParams& params, const std::vector<Tensor>& inputs,
                                 const std::vector<Tensor>& targets, double epsilon, int n_samples,
                                 std::uint64_t seed) {
    if (inputs.empty() || inputs.size() != targets.size())
        throw InvalidArgument("gradient_check requires a nonempty batch with targets");
    auto fn = [&](ModelParams& p, ModelGrads* sink, std::uint64_t* pattern) {
        Executor ex(p);
        Tensor g;
        double total = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const Tensor& out = ex.forward(inputs[i]);
            total += mse_loss_grad(out, targets[i], g);
            if (pattern) *pattern = *pattern * 0x9e3779b97f4a7c15ull + ex.activation_pattern();
            if (sink) {
                for (double& x : g.v) x /= static_cast<double>(inputs.size());
                ex.backward(g, false, sink);
            }
        }
        return total / static_cast<double>(inputs.size());
    };
    return check_impl(params, fn, epsilon, n_samples, seed);
}

std::vector<int> oversample_minority(const std::vector<int>& labels, std::uint64_t seed) {
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
    std::size_t target = 0;
    for (auto& [c, idxs] : by_class) target = std::max(target, idxs.size());
    std::vector<int> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(splitmix64(seed ^ 0x6f766572730001ull));
    for (auto& [c, idxs] : by_class) {
        for (std::size_t need = idxs.size(); need < target; ++need)
            order.push_back(idxs[rng.below(idxs.size())]);
    }
    return order;
}

}  // namespace lusgate::nn
