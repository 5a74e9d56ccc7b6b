#include "lusgate/diagnosis.hpp"

#include <algorithm>
#include <cstdio>

#include "lusgate/errors.hpp"
#include "lusgate/rng.hpp"

namespace lusgate {

std::string score_line(const DiagnosisScore& s, Diagnosis true_label) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", s.p_positive);
    return s.frame_id + " " + std::to_string(s.fold_index) + " " + buf + " " + diagnosis_name(true_label);
}

nn::ModelParams train_dbin(const std::vector<Tensor>& frames, const std::vector<Diagnosis>& labels,
                           const nn::Hyperparams& hp) {
    if (frames.size() != labels.size()) throw InvalidArgument("frames and labels differ in length");
    if (frames.empty()) throw InvalidArgument("empty training set");
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == Diagnosis::Unknown)
            throw InvalidArgument("diagnosis training requires labelled frames");
        y[i] = labels[i] == Diagnosis::Positive ? 0 : 1;
    }
    if (std::count(y.begin(), y.end(), 0) == 0 || std::count(y.begin(), y.end(), 1) == 0)
        throw InvalidArgument("single-class input");

    auto params = nn::build_network(nn::vgg_classifier_spec(frames[0].h, frames[0].w, frames[0].c, 2),
                                    derive_seed(hp.seed, "dbin-init"));
    nn::train_supervised(params, frames, y, hp);
    return params;
}

double score_diag(const nn::ModelParams& dbin, const Tensor& frame) {
    nn::Executor ex(dbin);
    return ex.forward(frame).v[0];  // class 0 = positive
}

CrossvalResult crossval_run(const Manifest& manifest, int k, std::uint64_t seed,
                            const nn::Hyperparams& hp) {
    CrossvalResult out;
    out.split = patient_kfold(manifest.patients(), k, derive_seed(seed, "cv-split"));

    for (int fold = 0; fold < k; ++fold) {
        auto train_metas = frames_for(manifest, out.split.train_patients(fold));
        auto test_metas = frames_for(manifest, out.split.test_patients(fold));

        std::vector<Tensor> train_frames;
        std::vector<Diagnosis> train_labels;
        train_frames.reserve(train_metas.size());
        for (const auto& meta : train_metas) {
            train_frames.push_back(load_frame(manifest, meta));
            train_labels.push_back(meta.label.diagnosis);
        }

        FoldResult fr;
        auto fold_hp = hp;
        fold_hp.seed = derive_seed(seed, "cv-fold", fold);
        fr.model = train_dbin(train_frames, train_labels, fold_hp);

        nn::Executor ex(fr.model);
        for (const auto& meta : test_metas) {
            DiagnosisScore s;
            s.frame_id = meta.frame_id;
            s.p_positive = ex.forward(load_frame(manifest, meta)).v[0];
            s.fold_index = fold;
            fr.test_scores.push_back(std::move(s));
        }
        fr.test_metas = std::move(test_metas);
        out.folds.push_back(std::move(fr));
    }
    return out;
}

}  // namespace lusgate
