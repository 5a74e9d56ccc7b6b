#include <benchmark/benchmark.h>

#include <vector>

#include "lusgate/diagnosis.hpp"
#include "lusgate/eval.hpp"
#include "lusgate/network.hpp"
#include "lusgate/phantom.hpp"
#include "lusgate/qa.hpp"
#include "lusgate/rng.hpp"
#include "lusgate/saliency.hpp"

using namespace lusgate;

namespace {

Tensor random_frame(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(h, w, 1);
    for (auto& v : t.v) v = rng.uniform();
    return t;
}

const nn::ModelParams& classifier64() {
    static nn::ModelParams params = nn::build_network(nn::vgg_classifier_spec(64, 64, 1, 2), 1);
    return params;
}

const QaModels& qa_models64() {
    static QaModels models = [] {
        QaModels m;
        m.bin = classifier64();
        NoveltyModel nd;
        nd.reconstructor = nn::build_network(nn::reconstructor_spec(64, 64, 1), 2);
        nd.discriminator = nn::build_network(nn::discriminator_spec(64, 64, 1), 3);
        m.nd = nd;
        m.priors = estimate_priors(1760, 1496);
        return m;
    }();
    return models;
}

}  // namespace

static void BM_ClassifierForward(benchmark::State& state) {
    nn::Executor ex(classifier64());
    Tensor frame = random_frame(64, 64, 7);
    for (auto _ : state) benchmark::DoNotOptimize(ex.forward(frame).v[0]);
}
BENCHMARK(BM_ClassifierForward);

static void BM_ClassifierTrainStep(benchmark::State& state) {
    nn::Executor ex(classifier64());
    nn::ModelGrads grads = nn::make_grads(classifier64());
    Tensor frame = random_frame(64, 64, 8);
    Tensor grad(1, 1, 2);
    grad.v = {1.0, -1.0};
    for (auto _ : state) {
        ex.forward(frame);
        benchmark::DoNotOptimize(ex.backward(grad, true, &grads));
    }
}
BENCHMARK(BM_ClassifierTrainStep);

static void BM_NoveltyScore(benchmark::State& state) {
    const QaModels& m = qa_models64();
    Tensor frame = random_frame(64, 64, 9);
    for (auto _ : state) benchmark::DoNotOptimize(score_nd(*m.nd, frame));
}
BENCHMARK(BM_NoveltyScore);

static void BM_AssessCombined(benchmark::State& state) {
    const QaModels& m = qa_models64();
    Tensor frame = random_frame(64, 64, 10);
    for (auto _ : state)
        benchmark::DoNotOptimize(assess(frame, "bench", m, QaVariant::BinNd, 0.5).p_qa);
}
BENCHMARK(BM_AssessCombined);

static void BM_RenderFrame(benchmark::State& state) {
    PhantomConfig cfg;
    FrameRecipe recipe = make_frame_recipe(cfg, Quality::Sufficient, InsufficientMode::None,
                                           Diagnosis::Positive, 42);
    for (auto _ : state) benchmark::DoNotOptimize(generate_frame(recipe).v[0]);
}
BENCHMARK(BM_RenderFrame);

static void BM_GradCam(benchmark::State& state) {
    const nn::ModelParams& params = classifier64();
    Tensor frame = random_frame(64, 64, 11);
    int layer = last_conv_layer(params.spec);
    for (auto _ : state) benchmark::DoNotOptimize(grad_cam(params, frame, 0, layer).heatmap.v[0]);
}
BENCHMARK(BM_GradCam);

static void BM_RocCurve(benchmark::State& state) {
    Rng rng(12);
    const int n = static_cast<int>(state.range(0));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        labels[i] = static_cast<int>(rng.below(2));
    }
    for (auto _ : state) benchmark::DoNotOptimize(auc(roc_curve(scores, labels)));
    state.SetComplexityN(n);
}
BENCHMARK(BM_RocCurve)->Range(1 << 10, 1 << 16)->Complexity();

BENCHMARK_MAIN();
