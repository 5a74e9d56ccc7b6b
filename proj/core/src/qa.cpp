#include "lusgate/qa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "lusgate/errors.hpp"
#include "lusgate/model_io.hpp"
#include "lusgate/rng.hpp"

namespace lusgate {

void Priors::validate() const {
    if (!(p_bin_prior >= 0.0 && p_bin_prior <= 1.0 && p_nd_prior >= 0.0 && p_nd_prior <= 1.0))
        throw InvalidArgument("priors must lie in [0,1]");
    if (std::abs(p_bin_prior + p_nd_prior - 1.0) > 1e-12)
        throw InvalidArgument("priors must sum to 1");
}

Priors estimate_priors(long long n_bin_train, long long n_nd_train) {
    if (n_bin_train < 0 || n_nd_train < 0) throw InvalidArgument("training counts must be nonnegative");
    if (n_bin_train + n_nd_train == 0) throw InvalidArgument("both training counts are zero");
    Priors p;
    p.p_bin_prior = static_cast<double>(n_bin_train) / (n_bin_train + n_nd_train);
    p.p_nd_prior = 1.0 - p.p_bin_prior;
    return p;
}

double combine(double p_bin, double p_nd, const Priors& priors) {
    priors.validate();
    if (!(p_bin >= 0.0 && p_bin <= 1.0 && p_nd >= 0.0 && p_nd <= 1.0))
        throw InvalidArgument("probabilities must lie in [0,1]");
    const double v = priors.p_bin_prior * p_bin + priors.p_nd_prior * p_nd;
    return std::clamp(v, std::min(p_bin, p_nd), std::max(p_bin, p_nd));
}

const char* variant_name(QaVariant v) {
    switch (v) {
        case QaVariant::Bin: return "bin";
        case QaVariant::Nd: return "nd";
        default: return "bin+nd";
    }
}

QaVariant parse_variant(const std::string& s) {
    if (s == "bin") return QaVariant::Bin;
    if (s == "nd") return QaVariant::Nd;
    if (s == "bin+nd" || s == "bin-nd") return QaVariant::BinNd;
    throw InvalidArgument("unknown QA variant: " + s + " (expected bin, nd, or bin+nd)");
}

std::string verdict_line(const QualityVerdict& v) {
    auto fmt = [](double x) -> std::string {
        if (!std::isfinite(x)) return "na";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", x);
        return buf;
    };
    return v.frame_id + " " + fmt(v.p_bin) + " " + fmt(v.p_nd) + " " + fmt(v.p_qa) + " " +
           fmt(v.threshold) + " " + (v.accepted ? "1" : "0");
}

void GanOptions::validate() const {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be nonnegative");
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(learning_rate_r > 0.0 && learning_rate_d > 0.0))
        throw InvalidArgument("learning rates must be positive");
    if (!(learning_rate_d_decay > 0.0 && learning_rate_d_decay <= 1.0))
        throw InvalidArgument("learning_rate_d_decay must lie in (0,1]");
    if (pretrain_epochs < 0) throw InvalidArgument("pretrain_epochs must be nonnegative");
    if (!(pretrain_learning_rate > 0.0)) throw InvalidArgument("pretrain_learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0,1)");
    if (holdin_eval_frames < 1) throw InvalidArgument("holdin_eval_frames must be at least 1");
}

nn::ModelParams train_qa_bin(const std::vector<Tensor>& frames, const std::vector<Quality>& labels,
                             const nn::Hyperparams& hp) {
    if (frames.size() != labels.size()) throw InvalidArgument("frames and labels differ in length");
    if (frames.empty()) throw InvalidArgument("empty training set");
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == Quality::Sufficient ? 0 : 1;
    if (std::count(y.begin(), y.end(), 0) == 0 || std::count(y.begin(), y.end(), 1) == 0)
        throw InvalidArgument("single-class input");

    auto params = nn::build_network(nn::vgg_classifier_spec(frames[0].h, frames[0].w, frames[0].c, 2),
                                    derive_seed(hp.seed, "qa-bin-init"));
    nn::train_supervised(params, frames, y, hp);
    return params;
}

namespace {

void check_same_shape(const std::vector<Tensor>& frames) {
    for (const auto& f : frames)
        if (!f.same_shape(frames[0])) throw InvalidArgument("frames differ in shape");
}

double mean_recon_loss(nn::Executor& rex, const std::vector<Tensor>& frames, int limit) {
    const int n = std::min<int>(limit, static_cast<int>(frames.size()));
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += mean_squared_diff(rex.forward(frames[i]), frames[i]);
    return total / n;
}

// Generic degradation of a frame for discriminator warm-start. None of the
// branches replicates an in-class rendering path; they only destroy content
// in ways any capture pipeline can (masking, gain loss, noise, misframing).
void corrupt_frame(const Tensor& x, Rng& rng, Tensor& out) {
    out = x;
    switch (static_cast<int>(rng.below(4))) {
        case 0: {  // flat patch over a large region
            const int ph = std::max(1, static_cast<int>(x.h * rng.uniform(0.35, 0.75)));
            const int pw = std::max(1, static_cast<int>(x.w * rng.uniform(0.35, 0.75)));
            const int r0 = static_cast<int>(rng.below(x.h - ph + 1));
            const int c0 = static_cast<int>(rng.below(x.w - pw + 1));
            const double level = rng.uniform(0.0, 0.2);
            for (int r = r0; r < r0 + ph; ++r)
                for (int cc = c0; cc < c0 + pw; ++cc)
                    for (int ch = 0; ch < x.c; ++ch) out.at(r, cc, ch) = level;
            break;
        }
        case 1: {  // gain collapse
            const double g = rng.uniform(0.1, 0.45);
            for (double& v : out.v) v *= g;
            break;
        }
        case 2: {  // heavy additive noise
            const double s = rng.uniform(0.25, 0.6);
            for (double& v : out.v) v = std::clamp(v + rng.normal(0.0, s), 0.0, 1.0);
            break;
        }
        default: {  // wrapped shift displacing the anatomy
            const int dr = static_cast<int>(x.h / 4 + rng.below(std::max(1, x.h / 4)));
            const int dc = static_cast<int>(x.w / 4 + rng.below(std::max(1, x.w / 4)));
            for (int r = 0; r < x.h; ++r)
                for (int cc = 0; cc < x.w; ++cc)
                    for (int ch = 0; ch < x.c; ++ch)
                        out.at(r, cc, ch) = x.at((r + dr) % x.h, (cc + dc) % x.w, ch);
            break;
        }
    }
}

}  // namespace

NoveltyModel train_qa_nd(const std::vector<Tensor>& frames, const GanOptions& opt) {
    opt.validate();
    if (frames.empty()) throw InvalidArgument("empty input");
    check_same_shape(frames);
    const int h = frames[0].h, w = frames[0].w, c = frames[0].c;

    NoveltyModel model;
    model.noise_sigma = opt.noise_sigma;
    model.reconstructor = nn::build_network(nn::reconstructor_spec(h, w, c), derive_seed(opt.seed, "nd-r"));
    model.discriminator = nn::build_network(nn::discriminator_spec(h, w, c), derive_seed(opt.seed, "nd-d"));

    nn::Executor rex(model.reconstructor), dex(model.discriminator);
    nn::SgdState r_opt(model.reconstructor), d_opt(model.discriminator);
    auto r_grads = nn::make_grads(model.reconstructor);
    auto d_grads = nn::make_grads(model.discriminator);
    nn::Hyperparams hp_r, hp_d;
    hp_r.learning_rate = opt.learning_rate_r;
    hp_d.learning_rate = opt.learning_rate_d;
    hp_r.momentum = hp_d.momentum = opt.momentum;

    Rng rng(derive_seed(opt.seed, "nd-train"));
    std::vector<int> order(frames.size());
    std::iota(order.begin(), order.end(), 0);

    // warm-start: ground D in content before it ever sees a reconstruction
    if (opt.pretrain_epochs > 0) {
        Rng prng(derive_seed(opt.seed, "nd-pretrain"));
        nn::Hyperparams hp_p;
        hp_p.learning_rate = opt.pretrain_learning_rate;
        hp_p.momentum = opt.momentum;
        Tensor bad(h, w, c), p_grad;
        for (int epoch = 0; epoch < opt.pretrain_epochs; ++epoch) {
            prng.shuffle(order);
            for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
                const std::size_t stop = std::min(order.size(), start + opt.batch_size);
                d_grads.zero();
                double loss = 0.0;
                for (std::size_t k = start; k < stop; ++k) {
                    const Tensor& x = frames[order[k]];
                    loss += nn::classification_loss_grad(dex.forward(x), 1, 1.0,
                                                         nn::LossKind::AdvDiscriminator, p_grad);
                    dex.backward(p_grad, true, &d_grads);
                    corrupt_frame(x, prng, bad);
                    loss += nn::classification_loss_grad(dex.forward(bad), 0, 1.0,
                                                         nn::LossKind::AdvDiscriminator, p_grad);
                    dex.backward(p_grad, true, &d_grads);
                }
                d_opt.step(model.discriminator, d_grads, hp_p, 2.0 * static_cast<double>(stop - start));
                if (!std::isfinite(loss))
                    throw NumericError("discriminator warm-start diverged at epoch " + std::to_string(epoch));
            }
        }
    }

    std::vector<nn::ParamBlock> best_r, best_d;
    double best_loss = std::numeric_limits<double>::infinity();
    Tensor noisy(h, w, c), d_grad, adv_grad, recon_grad, total_grad;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        hp_d.learning_rate = opt.learning_rate_d * std::pow(opt.learning_rate_d_decay, epoch);
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opt.batch_size);
            const double n_items = static_cast<double>(stop - start);

            // discriminator pass: real frames vs current reconstructions
            d_grads.zero();
            double d_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const Tensor& x = frames[order[k]];
                for (std::size_t i = 0; i < x.v.size(); ++i)
                    noisy.v[i] = x.v[i] + rng.normal(0.0, opt.noise_sigma);

                d_loss += nn::classification_loss_grad(dex.forward(x), 1, 1.0,
                                                       nn::LossKind::AdvDiscriminator, d_grad);
                dex.backward(d_grad, true, &d_grads);
                d_loss += nn::classification_loss_grad(dex.forward(rex.forward(noisy)), 0, 1.0,
                                                       nn::LossKind::AdvDiscriminator, d_grad);
                dex.backward(d_grad, true, &d_grads);
            }
            d_opt.step(model.discriminator, d_grads, hp_d, 2.0 * n_items);

            // reconstructor pass: fool the updated discriminator, stay near x
            r_grads.zero();
            double r_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const Tensor& x = frames[order[k]];
                for (std::size_t i = 0; i < x.v.size(); ++i)
                    noisy.v[i] = x.v[i] + rng.normal(0.0, opt.noise_sigma);

                const Tensor& rec = rex.forward(noisy);
                r_loss += nn::classification_loss_grad(dex.forward(rec), 1, 1.0,
                                                       nn::LossKind::AdvGenerator, d_grad);
                adv_grad = dex.backward(d_grad, true, nullptr);

                // lambda weights the summed squared error ||x - R(x~)||^2,
                // not the per-pixel mean; the reconstruction term must stay
                // comparable to the adversarial one.
                const double npix = static_cast<double>(rec.v.size());
                double mse = nn::mse_loss_grad(rec, x, recon_grad);
                r_loss += opt.lambda * mse * npix;
                total_grad = adv_grad;
                for (std::size_t i = 0; i < total_grad.v.size(); ++i)
                    total_grad.v[i] += opt.lambda * npix * recon_grad.v[i];
                rex.backward(total_grad, false, &r_grads);
            }
            r_opt.step(model.reconstructor, r_grads, hp_r, n_items);

            if (!std::isfinite(d_loss) || !std::isfinite(r_loss))
                throw NumericError("adversarial training diverged at epoch " + std::to_string(epoch));
        }

        const double holdin = mean_recon_loss(rex, frames, opt.holdin_eval_frames);
        if (!std::isfinite(holdin))
            throw NumericError("adversarial training diverged at epoch " + std::to_string(epoch));
        model.recon_loss_history.push_back(holdin);
        if (holdin < best_loss) {
            best_loss = holdin;
            best_r = model.reconstructor.blocks;
            best_d = model.discriminator.blocks;
            model.best_epoch = epoch;
        }
    }

    model.reconstructor.blocks = std::move(best_r);
    model.discriminator.blocks = std::move(best_d);
    auto& rmeta = model.reconstructor.meta;
    auto& dmeta = model.discriminator.meta;
    rmeta.seed = dmeta.seed = opt.seed;
    rmeta.epochs = dmeta.epochs = opt.epochs;
    rmeta.final_loss = dmeta.final_loss = best_loss;
    rmeta.n_train = dmeta.n_train = static_cast<std::int64_t>(frames.size());

    // min-max calibration of raw D(R(x)) over the training set, noise-free
    nn::Executor rex2(model.reconstructor), dex2(model.discriminator);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : frames) {
        const double raw = dex2.forward(rex2.forward(x)).v[0];
        lo = std::min(lo, raw);
        hi = std::max(hi, raw);
    }
    if (hi - lo < 1e-9) {  // degenerate spread: pin scores to 0.5
        lo -= 0.5;
        hi += 0.5;
    }
    model.calib_lo = lo;
    model.calib_hi = hi;
    return model;
}

double score_bin(const nn::ModelParams& qa_bin, const Tensor& frame) {
    nn::Executor ex(qa_bin);
    return ex.forward(frame).v[0];  // class 0 = sufficient
}

double score_nd(const NoveltyModel& model, const Tensor& frame) {
    nn::Executor rex(model.reconstructor), dex(model.discriminator);
    const double raw = dex.forward(rex.forward(frame)).v[0];
    return std::clamp((raw - model.calib_lo) / (model.calib_hi - model.calib_lo), 0.0, 1.0);
}

double reconstruction_error(const NoveltyModel& model, const Tensor& frame) {
    nn::Executor rex(model.reconstructor);
    return mean_squared_diff(rex.forward(frame), frame);
}

QualityVerdict assess(const Tensor& frame, const std::string& frame_id, const QaModels& models,
                      QaVariant variant, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0,1]");
    const bool need_bin = variant == QaVariant::Bin || variant == QaVariant::BinNd;
    const bool need_nd = variant == QaVariant::Nd || variant == QaVariant::BinNd;
    if (need_bin && !models.bin)
        throw InvalidArgument(std::string("variant ") + variant_name(variant) + " needs a binary QA model");
    if (need_nd && !models.nd)
        throw InvalidArgument(std::string("variant ") + variant_name(variant) + " needs a novelty model");

    QualityVerdict v;
    v.frame_id = frame_id;
    v.threshold = threshold;
    v.p_bin = models.bin ? score_bin(*models.bin, frame) : std::numeric_limits<double>::quiet_NaN();
    v.p_nd = models.nd ? score_nd(*models.nd, frame) : std::numeric_limits<double>::quiet_NaN();
    switch (variant) {
        case QaVariant::Bin: v.p_qa = v.p_bin; break;
        case QaVariant::Nd: v.p_qa = v.p_nd; break;
        default: v.p_qa = combine(v.p_bin, v.p_nd, models.priors); break;
    }
    v.accepted = v.p_qa >= threshold;
    return v;
}

namespace {
constexpr const char* kQaMetaHeader = "lusgate-qa v1";
}

void save_qa_models(const QaModels& models, const std::filesystem::path& dir) {
    models.priors.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    if (models.bin) save_model(*models.bin, dir / "qa_bin.model");
    if (models.nd) {
        save_model(models.nd->reconstructor, dir / "nd_reconstructor.model");
        save_model(models.nd->discriminator, dir / "nd_discriminator.model");
    }
    std::ofstream os(dir / "qa_meta.txt", std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / "qa_meta.txt").string());
    char buf[160];
    os << kQaMetaHeader << "\n";
    std::snprintf(buf, sizeof buf, "priors %.17g %.17g\n", models.priors.p_bin_prior,
                  models.priors.p_nd_prior);
    os << buf;
    os << "has_bin " << (models.bin ? 1 : 0) << "\n";
    os << "has_nd " << (models.nd ? 1 : 0) << "\n";
    if (models.nd) {
        std::snprintf(buf, sizeof buf, "nd_sigma %.17g\nnd_calib %.17g %.17g\nnd_best_epoch %d\n",
                      models.nd->noise_sigma, models.nd->calib_lo, models.nd->calib_hi,
                      models.nd->best_epoch);
        os << buf;
    }
    if (!os) throw IoError("failed writing " + (dir / "qa_meta.txt").string());
}

QaModels load_qa_models(const std::filesystem::path& dir) {
    std::ifstream is(dir / "qa_meta.txt");
    if (!is) throw IoError("cannot open " + (dir / "qa_meta.txt").string());
    std::string header;
    std::getline(is, header);
    if (header != kQaMetaHeader) throw SpecError("unknown QA bundle version: " + header);

    QaModels models;
    int has_bin = 0, has_nd = 0;
    std::string key;
    NoveltyModel nd;
    while (is >> key) {
        if (key == "priors")
            is >> models.priors.p_bin_prior >> models.priors.p_nd_prior;
        else if (key == "has_bin")
            is >> has_bin;
        else if (key == "has_nd")
            is >> has_nd;
        else if (key == "nd_sigma")
            is >> nd.noise_sigma;
        else if (key == "nd_calib")
            is >> nd.calib_lo >> nd.calib_hi;
        else if (key == "nd_best_epoch")
            is >> nd.best_epoch;
        else
            throw SpecError("unknown QA bundle field: " + key);
        if (!is) throw SpecError("malformed QA bundle field: " + key);
    }
    models.priors.validate();
    if (has_bin) models.bin = load_model(dir / "qa_bin.model");
    if (has_nd) {
        nd.reconstructor = load_model(dir / "nd_reconstructor.model");
        nd.discriminator = load_model(dir / "nd_discriminator.model");
        models.nd = std::move(nd);
    }
    return models;
}

}  // namespace lusgate
