#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lusgate/dataset.hpp"
#include "lusgate/network.hpp"
#include "lusgate/train.hpp"

namespace lusgate {

struct Priors {
    double p_bin_prior = 0.5;
    double p_nd_prior = 0.5;

    void validate() const;  // each in [0,1], sum within 1e-12 of 1
};

// Proportions of the two training-set sizes; the second prior is computed as
// 1 - first so the pair always sums to 1 exactly.
Priors estimate_priors(long long n_bin_train, long long n_nd_train);

// Convex combination of the two quality probabilities under the priors.
// Clamped into [min(p_bin,p_nd), max(p_bin,p_nd)] so the convexity invariant
// holds exactly despite rounding.
double combine(double p_bin, double p_nd, const Priors& priors);

enum class QaVariant { Bin, Nd, BinNd };
const char* variant_name(QaVariant v);
QaVariant parse_variant(const std::string& s);

struct QualityVerdict {
    std::string frame_id;
    double p_bin = 0.0;  // NaN when no binary model was consulted
    double p_nd = 0.0;   // NaN when no novelty model was consulted
    double p_qa = 0.0;
    double threshold = 0.5;
    bool accepted = false;
};

// "frame_id p_bin p_nd p_qa threshold accepted", probabilities at 6 decimals,
// accepted as 1/0, missing probabilities as "na"
std::string verdict_line(const QualityVerdict& v);

struct GanOptions {
    double lambda = 0.4;       // weight of the summed squared error ||x - R(x~)||^2
    double noise_sigma = 0.1;  // input corruption during training
    int epochs = 8;
    int batch_size = 32;
    double learning_rate_r = 1e-4;
    double learning_rate_d = 0.01;
    // Per-epoch multiplier on the discriminator learning rate. Real frames
    // and reconstructions are separable by texture alone, so an unchecked
    // discriminator saturates and its output ordering degenerates; decaying
    // its rate keeps it near the warm-started content features.
    double learning_rate_d_decay = 0.1;
    // Warm-start phase: the discriminator first learns to separate training
    // frames from generically corrupted copies (flat patch, gain collapse,
    // heavy noise, wrapped shift). This grounds its output in frame content
    // before the adversarial phase; from random weights that grounding is
    // left to the luck of the initialization.
    int pretrain_epochs = 3;
    double pretrain_learning_rate = 0.01;
    double momentum = 0.9;
    int holdin_eval_frames = 128;  // best-epoch selection subset
    std::uint64_t seed = 1;

    void validate() const;
};

struct NoveltyModel {
    nn::ModelParams reconstructor;   // image -> image, sigmoid head
    nn::ModelParams discriminator;   // image -> scalar sigmoid
    double noise_sigma = 0.1;
    double calib_lo = 0.0;           // affine min-max calibration of raw D(R(x))
    double calib_hi = 1.0;
    int best_epoch = 0;
    std::vector<double> recon_loss_history;  // held-in reconstruction loss per epoch
};

// Supervised quality classifier; class 0 = sufficient, class 1 = insufficient.
nn::ModelParams train_qa_bin(const std::vector<Tensor>& frames, const std::vector<Quality>& labels,
                             const nn::Hyperparams& hp);

// Adversarial one-class training on sufficient-quality frames only: a
// denoising reconstructor R against a real-vs-reconstructed discriminator D.
// R minimizes BCE(D(R(x~)), real) + lambda*||x - R(x~)||^2 with
// x~ = x + N(0, noise_sigma); D maximizes real/fake discrimination. The
// epoch whose held-in noise-free reconstruction loss is lowest is kept.
NoveltyModel train_qa_nd(const std::vector<Tensor>& frames, const GanOptions& opt);

// p(sufficient) from the supervised classifier.
double score_bin(const nn::ModelParams& qa_bin, const Tensor& frame);

// Calibrated D(R(x)), evaluated noise-free.
double score_nd(const NoveltyModel& model, const Tensor& frame);

// ||x - R(x)||^2 / n, noise-free; diagnostic only.
double reconstruction_error(const NoveltyModel& model, const Tensor& frame);

struct QaModels {
    std::optional<nn::ModelParams> bin;
    std::optional<NoveltyModel> nd;
    Priors priors;
};

QualityVerdict assess(const Tensor& frame, const std::string& frame_id, const QaModels& models,
                      QaVariant variant, double threshold);

// Directory layout: qa_bin.model, nd_reconstructor.model,
// nd_discriminator.model (if present) plus qa_meta.txt.
void save_qa_models(const QaModels& models, const std::filesystem::path& dir);
QaModels load_qa_models(const std::filesystem::path& dir);

}  // namespace lusgate
