#pragma once

#include <string>
#include <vector>

#include "lusgate/dataset.hpp"
#include "lusgate/network.hpp"
#include "lusgate/train.hpp"

namespace lusgate {

struct DiagnosisScore {
    std::string frame_id;
    double p_positive = 0.0;
    int fold_index = 0;
};

// "frame_id fold p_positive true_label"
std::string score_line(const DiagnosisScore& s, Diagnosis true_label);

// Supervised diagnosis classifier; class 0 = positive, class 1 = control.
// Training uses all quality classes, mirroring the unscreened protocol.
nn::ModelParams train_dbin(const std::vector<Tensor>& frames, const std::vector<Diagnosis>& labels,
                           const nn::Hyperparams& hp);

double score_diag(const nn::ModelParams& dbin, const Tensor& frame);  // p_positive

struct FoldResult {
    nn::ModelParams model;
    std::vector<DiagnosisScore> test_scores;      // one per test frame, manifest order
    std::vector<FrameMeta> test_metas;            // aligned with test_scores
};

struct CrossvalResult {
    FoldSplit split;
    std::vector<FoldResult> folds;
};

// Patient-level k-fold cross-validation: trains one model per fold on the
// other folds' frames and scores exactly the held-out fold's frames.
CrossvalResult crossval_run(const Manifest& manifest, int k, std::uint64_t seed,
                            const nn::Hyperparams& hp);

}  // namespace lusgate
