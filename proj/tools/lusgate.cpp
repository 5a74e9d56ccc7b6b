// lusgate command-line front end: phantom dataset generation, QA and
// diagnosis training, screened evaluation, closed-loop simulation, saliency
// export, and report assembly. Every command takes one --seed and derives all
// internal randomness from it; identical arguments and inputs reproduce
// identical output bytes.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lusgate/dataset.hpp"
#include "lusgate/diagnosis.hpp"
#include "lusgate/errors.hpp"
#include "lusgate/eval.hpp"
#include "lusgate/loop.hpp"
#include "lusgate/model_io.hpp"
#include "lusgate/pgm.hpp"
#include "lusgate/phantom.hpp"
#include "lusgate/qa.hpp"
#include "lusgate/rng.hpp"
#include "lusgate/saliency.hpp"

namespace fs = std::filesystem;
using namespace lusgate;

namespace {

std::string fmtg(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << content;
    if (!os) throw IoError("failed writing " + path.string());
}

// key=value echo of every effective parameter; rerunning with these values
// reproduces the command.
void echo_config(const fs::path& out_dir, const std::string& command,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string s = "command=" + command + "\n";
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    write_text(out_dir / (command + "_config.txt"), s);
}

std::vector<Tensor> load_frames(const Manifest& m, const std::vector<FrameMeta>& metas) {
    std::vector<Tensor> out;
    out.reserve(metas.size());
    for (const auto& meta : metas) out.push_back(load_frame(m, meta));
    return out;
}

// Missing models carry zero prior weight; with both present the priors follow
// the respective training-set sizes.
Priors priors_for(const QaModels& m) {
    if (m.bin && m.nd) return estimate_priors(m.bin->meta.n_train, m.nd->reconstructor.meta.n_train);
    if (m.bin) return estimate_priors(1, 0);
    if (m.nd) return estimate_priors(0, 1);
    return Priors{};
}

QaModels load_or_empty(const fs::path& dir) {
    if (fs::exists(dir / "qa_meta.txt")) return load_qa_models(dir);
    return QaModels{};
}

constexpr const char* kSplitHeader = "lusgate-split v1";

void save_split(const FoldSplit& split, const fs::path& path) {
    std::string s = std::string(kSplitHeader) + "\n";
    for (int f = 0; f < split.k; ++f)
        for (const auto& pid : split.folds[f]) s += std::to_string(f) + "\t" + pid + "\n";
    write_text(path, s);
}

FoldSplit load_split(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != kSplitHeader)
        throw SpecError("unknown split schema version in " + path.string());
    FoldSplit split;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw SpecError("malformed split line: " + line);
        int fold = std::stoi(line.substr(0, tab));
        if (fold < 0) throw SpecError("negative fold index in " + path.string());
        if (static_cast<std::size_t>(fold) >= split.folds.size()) split.folds.resize(fold + 1);
        split.folds[fold].push_back(line.substr(tab + 1));
    }
    split.k = static_cast<int>(split.folds.size());
    if (split.k < 2) throw SpecError("split file holds fewer than 2 folds");
    return split;
}

struct GenArgs {
    PhantomConfig cfg;
    std::string out;
};

void cmd_gen(const GenArgs& a) {
    Manifest m = generate_dataset(a.cfg, a.out);
    echo_config(a.out, "gen",
                {{"positive", std::to_string(a.cfg.n_patients_positive)},
                 {"control", std::to_string(a.cfg.n_patients_control)},
                 {"frames", std::to_string(a.cfg.frames_per_patient)},
                 {"insufficient_fraction", fmtg(a.cfg.insufficient_fraction)},
                 {"noise", fmtg(a.cfg.noise_level)},
                 {"height", std::to_string(a.cfg.frame_h)},
                 {"width", std::to_string(a.cfg.frame_w)},
                 {"site", site_name(a.cfg.site)},
                 {"seed", std::to_string(a.cfg.seed)}});
    SiteSummary s = m.summary(a.cfg.site);
    std::printf("wrote %d frames (%d patients, %d sufficient / %d insufficient) to %s\n", s.frames,
                s.patients, s.sufficient, s.insufficient, a.out.c_str());
}

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::uint64_t seed = 1;
    int epochs = 12;
    double lr = 0.01;
    int batch = 32;
    // qa-nd only, defaulted from GanOptions (--epochs/--lr fall back there too)
    double lambda = GanOptions{}.lambda;
    double noise_sigma = GanOptions{}.noise_sigma;
    double lr_d = GanOptions{}.learning_rate_d;
    double lr_d_decay = GanOptions{}.learning_rate_d_decay;
    int holdin = GanOptions{}.holdin_eval_frames;
    // diag only
    int folds = 5;
};

void cmd_train_qa_bin(const TrainArgs& a) {
    Manifest m = load_manifest(a.manifest);
    std::vector<Tensor> frames = load_frames(m, m.records);
    std::vector<Quality> labels;
    for (const auto& r : m.records) labels.push_back(r.label.quality);

    nn::Hyperparams hp;
    hp.epochs = a.epochs;
    hp.learning_rate = a.lr;
    hp.batch_size = a.batch;
    hp.seed = derive_seed(a.seed, "qa-bin");

    QaModels models = load_or_empty(a.out);
    models.bin = train_qa_bin(frames, labels, hp);
    models.priors = priors_for(models);
    save_qa_models(models, a.out);

    long long n_suff = std::count(labels.begin(), labels.end(), Quality::Sufficient);
    std::string log = "trained qa_bin on " + std::to_string(frames.size()) + " frames (" +
                      std::to_string(n_suff) + " sufficient, " +
                      std::to_string(frames.size() - n_suff) + " insufficient)\n" +
                      "epochs=" + std::to_string(a.epochs) + " final_loss=" + fmtg(models.bin->meta.final_loss) + "\n";
    write_text(fs::path(a.out) / "train_qa_bin_log.txt", log);
    echo_config(a.out, "train_qa_bin",
                {{"manifest", a.manifest},
                 {"seed", std::to_string(a.seed)},
                 {"epochs", std::to_string(a.epochs)},
                 {"lr", fmtg(a.lr)},
                 {"batch", std::to_string(a.batch)}});
    std::printf("qa_bin trained on %zu frames, final loss %.6f -> %s\n", frames.size(),
                models.bin->meta.final_loss, a.out.c_str());
}

void cmd_train_qa_nd(const TrainArgs& a) {
    Manifest m = load_manifest(a.manifest);
    std::vector<FrameMeta> suff_metas;
    for (const auto& r : m.records)
        if (r.label.quality == Quality::Sufficient) suff_metas.push_back(r);
    long long excluded = static_cast<long long>(m.records.size()) - static_cast<long long>(suff_metas.size());
    std::vector<Tensor> frames = load_frames(m, suff_metas);

    GanOptions opt;
    opt.lambda = a.lambda;
    opt.noise_sigma = a.noise_sigma;
    opt.epochs = a.epochs;
    opt.batch_size = a.batch;
    opt.learning_rate_r = a.lr;
    opt.learning_rate_d = a.lr_d;
    opt.learning_rate_d_decay = a.lr_d_decay;
    opt.holdin_eval_frames = a.holdin;
    opt.seed = derive_seed(a.seed, "qa-nd");

    QaModels models = load_or_empty(a.out);
    models.nd = train_qa_nd(frames, opt);
    models.priors = priors_for(models);
    save_qa_models(models, a.out);

    std::string log = "excluded " + std::to_string(excluded) +
                      " insufficient-quality frames; trained on " + std::to_string(frames.size()) +
                      " sufficient frames\nbest_epoch=" + std::to_string(models.nd->best_epoch) +
                      "\nrecon_loss_per_epoch:";
    for (double x : models.nd->recon_loss_history) log += " " + fmtg(x);
    log += "\n";
    write_text(fs::path(a.out) / "train_qa_nd_log.txt", log);
    echo_config(a.out, "train_qa_nd",
                {{"manifest", a.manifest},
                 {"seed", std::to_string(a.seed)},
                 {"epochs", std::to_string(a.epochs)},
                 {"lr", fmtg(a.lr)},
                 {"lr_d", fmtg(a.lr_d)},
                 {"lr_d_decay", fmtg(a.lr_d_decay)},
                 {"batch", std::to_string(a.batch)},
                 {"lambda", fmtg(a.lambda)},
                 {"noise_sigma", fmtg(a.noise_sigma)},
                 {"holdin", std::to_string(a.holdin)}});
    std::printf("qa_nd: excluded %lld insufficient-quality frames, trained on %zu, best epoch %d -> %s\n",
                excluded, frames.size(), models.nd->best_epoch, a.out.c_str());
}

void cmd_train_diag(const TrainArgs& a) {
    Manifest m = load_manifest(a.manifest);
    nn::Hyperparams hp;
    hp.epochs = a.epochs;
    hp.learning_rate = a.lr;
    hp.batch_size = a.batch;
    hp.seed = a.seed;  // crossval_run derives per-fold seeds itself

    CrossvalResult cv = crossval_run(m, a.folds, a.seed, hp);

    fs::create_directories(a.out);
    save_split(cv.split, fs::path(a.out) / "split.txt");
    std::string scores, log;
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const FoldResult& fr = cv.folds[f];
        char name[64];
        std::snprintf(name, sizeof name, "dbin_fold%zu.model", f);
        save_model(fr.model, fs::path(a.out) / name);
        for (std::size_t i = 0; i < fr.test_scores.size(); ++i)
            scores += score_line(fr.test_scores[i], fr.test_metas[i].label.diagnosis) + "\n";
        log += "fold " + std::to_string(f) + ": n_train=" + std::to_string(fr.model.meta.n_train) +
               " n_test=" + std::to_string(fr.test_scores.size()) +
               " final_loss=" + fmtg(fr.model.meta.final_loss) + "\n";
    }
    write_text(fs::path(a.out) / "scores.txt", scores);
    write_text(fs::path(a.out) / "train_diag_log.txt", log);
    echo_config(a.out, "train_diag",
                {{"manifest", a.manifest},
                 {"seed", std::to_string(a.seed)},
                 {"folds", std::to_string(a.folds)},
                 {"epochs", std::to_string(a.epochs)},
                 {"lr", fmtg(a.lr)},
                 {"batch", std::to_string(a.batch)}});
    std::printf("diag: %d fold models -> %s\n", a.folds, a.out.c_str());
}

struct EvalArgs {
    std::string manifest;
    std::string qa_models;
    std::string diag_models;
    std::string out;
    std::string variant;  // empty = all three
    double qa_threshold = 0.5;
    double diag_threshold = 0.5;
    std::uint64_t seed = 1;
};

void cmd_eval(const EvalArgs& a) {
    Manifest m = load_manifest(a.manifest);
    QaModels qa = load_qa_models(a.qa_models);
    FoldSplit split = load_split(fs::path(a.diag_models) / "split.txt");

    std::map<std::string, int> patient_fold;
    for (int f = 0; f < split.k; ++f)
        for (const auto& pid : split.folds[f]) patient_fold[pid] = f;
    std::vector<nn::ModelParams> fold_models;
    for (int f = 0; f < split.k; ++f) {
        char name[64];
        std::snprintf(name, sizeof name, "dbin_fold%d.model", f);
        fold_models.push_back(load_model(fs::path(a.diag_models) / name));
    }

    std::vector<QaVariant> variants;
    if (a.variant.empty())
        variants = {QaVariant::Bin, QaVariant::Nd, QaVariant::BinNd};
    else
        variants = {parse_variant(a.variant)};

    // score every frame once with its fold's held-out model
    std::vector<Tensor> pixels;
    std::vector<int> folds;
    std::vector<double> p_pos;
    pixels.reserve(m.records.size());
    for (const auto& r : m.records) {
        auto it = patient_fold.find(r.patient_id);
        if (it == patient_fold.end()) throw InvalidArgument("patient " + r.patient_id + " missing from split");
        Tensor x = load_frame(m, r);
        p_pos.push_back(score_diag(fold_models[it->second], x));
        folds.push_back(it->second);
        pixels.push_back(std::move(x));
    }

    std::string report = "lusgate evaluation report\n";
    report += "manifest: " + a.manifest + "  frames: " + std::to_string(m.records.size()) +
              "  folds: " + std::to_string(split.k) + "\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "qa_threshold: %.6f  diag_threshold: %.6f\n\n", a.qa_threshold,
                  a.diag_threshold);
    report += buf;

    std::string machine;
    bool wrote_ungated = false;
    for (QaVariant v : variants) {
        std::vector<GatedScore> gs(m.records.size());
        std::string verdicts;
        for (std::size_t i = 0; i < m.records.size(); ++i) {
            QualityVerdict qv = assess(pixels[i], m.records[i].frame_id, qa, v, a.qa_threshold);
            verdicts += verdict_line(qv) + "\n";
            gs[i] = {qv.frame_id, qv.p_qa, qv.accepted,
                     m.records[i].label.quality == Quality::Sufficient ? 1 : 0, p_pos[i],
                     m.records[i].label.diagnosis == Diagnosis::Positive ? 1 : 0};
        }
        std::string vname = variant_name(v);
        std::string fname = vname;
        std::replace(fname.begin(), fname.end(), '+', '_');
        write_text(fs::path(a.out) / ("verdicts_" + fname + ".txt"), verdicts);

        ScreenedResult sr = screened_eval(gs, a.diag_threshold);
        if (!wrote_ungated) {
            report += render_metrics_block("diagnosis ungated", sr.ungated) + "\n";
            wrote_ungated = true;
        }
        std::snprintf(buf, sizeof buf,
                      "== qa gate (%s) vs quality labels ==\naccepted        %lld of %zu (rejected %zu)\n"
                      "qa confusion    tp=%lld tn=%lld fp=%lld fn=%lld  accuracy %.6f\n\n",
                      vname.c_str(), sr.qa_confusion.tp + sr.qa_confusion.fp, m.records.size(),
                      sr.rejected_ids.size(), sr.qa_confusion.tp, sr.qa_confusion.tn, sr.qa_confusion.fp,
                      sr.qa_confusion.fn, accuracy(sr.qa_confusion));
        report += buf;
        report += render_metrics_block("diagnosis gated, variant " + vname, sr.gated);

        // per-fold gated accuracy
        for (int f = 0; f < split.k; ++f) {
            std::vector<GatedScore> fold_gs;
            for (std::size_t i = 0; i < gs.size(); ++i)
                if (folds[i] == f) fold_gs.push_back(gs[i]);
            ScreenedResult fsr = screened_eval(fold_gs, a.diag_threshold);
            const std::string facc = fsr.gated.empty ? "na" : fmt6(fsr.gated.accuracy_value);
            const std::string fuacc = fmt6(fsr.ungated.accuracy_value);
            std::snprintf(buf, sizeof buf, "fold %d          gated acc %s over %lld, ungated acc %s over %lld\n",
                          f, facc.c_str(), fsr.gated.n, fuacc.c_str(), fsr.ungated.n);
            report += buf;
        }
        report += "\n";
        machine += machine_report_line(vname, sr.gated) + "\n";
    }
    report += "machine lines (variant accuracy tp_rate tn_rate fp_rate fn_rate sens@.8 .9 .95 spec@.8 .9 .95):\n";
    report += machine;

    write_text(fs::path(a.out) / "report.txt", report);
    write_text(fs::path(a.out) / "report_lines.txt", machine);
    echo_config(a.out, "eval",
                {{"manifest", a.manifest},
                 {"qa_models", a.qa_models},
                 {"diag_models", a.diag_models},
                 {"qa_variant", a.variant.empty() ? "all" : a.variant},
                 {"qa_threshold", fmtg(a.qa_threshold)},
                 {"diag_threshold", fmtg(a.diag_threshold)},
                 {"seed", std::to_string(a.seed)}});
    std::printf("eval: %zu variant row(s) -> %s\n", variants.size(), a.out.c_str());
}

struct SimArgs {
    std::string qa_models;
    std::string out;
    std::string variant = "bin+nd";
    std::string schedule = "0.7,0.35,0.15,0.05,0.0";
    double qa_threshold = 0.5;
    int locations = 50;
    int max_attempts = 5;
    std::uint64_t seed = 1;
    PhantomConfig cfg;
};

void cmd_simulate(const SimArgs& a) {
    QaModels qa = load_qa_models(a.qa_models);
    AcquisitionPolicy policy;
    policy.max_attempts = a.max_attempts;
    policy.qa_variant = parse_variant(a.variant);
    policy.threshold = a.qa_threshold;

    std::vector<double> schedule;
    std::stringstream ss(a.schedule);
    std::string item;
    while (std::getline(ss, item, ',')) schedule.push_back(std::stod(item));
    if (schedule.empty()) throw InvalidArgument("empty attempt schedule");

    FrameSource source = operator_source(a.cfg, schedule, derive_seed(a.seed, "simulate"));
    SimulationResult res = simulate_acquisition(source, a.locations, qa, policy);

    write_text(fs::path(a.out) / "loop_log.txt", render_loop_log(res.log));
    echo_config(a.out, "simulate",
                {{"qa_models", a.qa_models},
                 {"qa_variant", a.variant},
                 {"qa_threshold", fmtg(a.qa_threshold)},
                 {"locations", std::to_string(a.locations)},
                 {"max_attempts", std::to_string(a.max_attempts)},
                 {"schedule", a.schedule},
                 {"seed", std::to_string(a.seed)},
                 {"height", std::to_string(a.cfg.frame_h)},
                 {"width", std::to_string(a.cfg.frame_w)},
                 {"noise", fmtg(a.cfg.noise_level)}});
    std::printf("simulate: accepted %zu of %d locations, %lld attempts -> %s\n",
                res.accepted_frames.size(), a.locations, res.log.total_attempts, a.out.c_str());
}

struct SaliencyArgs {
    std::string manifest;
    std::string model;
    std::string frame;
    std::string target = "positive";
    std::string out;
    int layer = -1;  // -1 = last conv layer
};

void cmd_saliency(const SaliencyArgs& a) {
    Manifest m = load_manifest(a.manifest);
    const FrameMeta* meta = nullptr;
    for (const auto& r : m.records)
        if (r.frame_id == a.frame) meta = &r;
    if (!meta) throw InvalidArgument("unknown frame id: " + a.frame);

    nn::ModelParams model = load_model(a.model);
    Tensor x = load_frame(m, *meta);
    Diagnosis target = parse_diagnosis(a.target);
    if (target == Diagnosis::Unknown) throw InvalidArgument("saliency target must be positive or control");
    int target_class = target == Diagnosis::Positive ? 0 : 1;
    int layer = a.layer >= 0 ? a.layer : last_conv_layer(model.spec);

    SaliencyMap map = guided_grad_cam(model, x, target_class, layer);
    fs::create_directories(a.out);
    write_pgm(tensor_to_image(map.heatmap), fs::path(a.out) / (a.frame + "_saliency.pgm"));
    auto rgb = colorize_overlay(x, map.heatmap);
    write_ppm(x.h, x.w, rgb, fs::path(a.out) / (a.frame + "_overlay.ppm"));
    echo_config(a.out, "saliency",
                {{"manifest", a.manifest},
                 {"model", a.model},
                 {"frame", a.frame},
                 {"class", a.target},
                 {"layer", std::to_string(layer)}});
    std::printf("saliency: wrote %s_saliency.pgm and %s_overlay.ppm to %s\n", a.frame.c_str(),
                a.frame.c_str(), a.out.c_str());
}

struct ReportArgs {
    std::string eval_dir;
    std::string loop_log;
    std::string out;
};

void cmd_report(const ReportArgs& a) {
    std::ifstream is(fs::path(a.eval_dir) / "report_lines.txt");
    if (!is) throw IoError("cannot open " + (fs::path(a.eval_dir) / "report_lines.txt").string());
    std::string combined = "lusgate combined report\n\n";
    char buf[240];
    std::snprintf(buf, sizeof buf, "%-8s %-9s %-9s %-9s %-9s %-9s %-9s %-9s %-9s %-9s %-9s %s\n",
                  "variant", "accuracy", "tp_rate", "tn_rate", "fp_rate", "fn_rate", "sens@.80",
                  "sens@.90", "sens@.95", "spec@.80", "spec@.90", "spec@.95");
    combined += buf;
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field, row;
        int col = 0;
        while (ss >> field) {
            std::snprintf(buf, sizeof buf, col == 0 ? "%-8s " : "%-9s ", field.c_str());
            row += buf;
            ++col;
        }
        if (col != 12) throw SpecError("malformed machine line: " + line);
        while (!row.empty() && row.back() == ' ') row.pop_back();
        combined += row + "\n";
        ++rows;
    }
    if (rows == 0) throw SpecError("no machine lines found in " + a.eval_dir);

    if (!a.loop_log.empty()) {
        std::ifstream ls(a.loop_log);
        if (!ls) throw IoError("cannot open " + a.loop_log);
        combined += "\nclosed-loop summary:\n";
        bool found = false;
        while (std::getline(ls, line))
            if (line.rfind("summary ", 0) == 0) {
                combined += line + "\n";
                found = true;
            }
        if (!found) throw SpecError("no summary block in " + a.loop_log);
    }
    write_text(fs::path(a.out) / "combined_report.txt", combined);
    echo_config(a.out, "report", {{"eval", a.eval_dir}, {"loop", a.loop_log}});
    std::printf("report: %d variant row(s) -> %s\n", rows, a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quality-gated lung ultrasound pipeline"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate a phantom dataset");
    cgen->add_option("--positive", gen.cfg.n_patients_positive, "positive patients");
    cgen->add_option("--control", gen.cfg.n_patients_control, "control patients");
    cgen->add_option("--frames", gen.cfg.frames_per_patient, "frames per patient");
    cgen->add_option("--insufficient-fraction", gen.cfg.insufficient_fraction, "insufficient-quality fraction");
    cgen->add_option("--noise", gen.cfg.noise_level, "speckle intensity");
    cgen->add_option("--height", gen.cfg.frame_h, "frame height");
    cgen->add_option("--width", gen.cfg.frame_w, "frame width");
    cgen->add_option("--seed", gen.cfg.seed, "generation seed");
    cgen->add_option("--out", gen.out, "dataset directory")->required();
    std::string gen_site = "B";
    cgen->add_option("--site", gen_site, "site tag (A or B)");

    TrainArgs tr;
    CLI::App* ctrain = app.add_subcommand("train", "train a model");
    ctrain->require_subcommand(1);
    auto add_train_common = [&tr](CLI::App* c) {
        c->add_option("--manifest", tr.manifest, "dataset manifest")->required();
        c->add_option("--out", tr.out, "model output directory")->required();
        c->add_option("--seed", tr.seed, "training seed");
        c->add_option("--epochs", tr.epochs, "training epochs");
        c->add_option("--lr", tr.lr, "learning rate");
        c->add_option("--batch", tr.batch, "batch size");
    };
    CLI::App* cbin = ctrain->add_subcommand("qa-bin", "supervised quality classifier");
    add_train_common(cbin);
    CLI::App* cnd = ctrain->add_subcommand("qa-nd", "adversarial one-class novelty detector");
    add_train_common(cnd);
    cnd->add_option("--lambda", tr.lambda, "reconstruction loss weight");
    cnd->add_option("--noise-sigma", tr.noise_sigma, "training input noise sigma");
    cnd->add_option("--lr-d", tr.lr_d, "discriminator learning rate");
    cnd->add_option("--lr-d-decay", tr.lr_d_decay, "per-epoch discriminator learning-rate decay");
    cnd->add_option("--holdin", tr.holdin, "best-epoch evaluation frames");
    CLI::App* cdiag = ctrain->add_subcommand("diag", "cross-validated diagnosis classifier");
    add_train_common(cdiag);
    cdiag->add_option("--folds", tr.folds, "cross-validation folds");

    EvalArgs ev;
    CLI::App* ceval = app.add_subcommand("eval", "screened evaluation report");
    ceval->add_option("--manifest", ev.manifest, "dataset manifest")->required();
    ceval->add_option("--qa-models", ev.qa_models, "QA model directory")->required();
    ceval->add_option("--diag-models", ev.diag_models, "diagnosis model directory")->required();
    ceval->add_option("--out", ev.out, "report directory")->required();
    ceval->add_option("--qa-variant", ev.variant, "restrict to one QA variant");
    ceval->add_option("--qa-threshold", ev.qa_threshold, "QA acceptance threshold");
    ceval->add_option("--diag-threshold", ev.diag_threshold, "diagnosis decision threshold");
    ceval->add_option("--seed", ev.seed, "seed (echoed; evaluation is deterministic)");

    SimArgs sim;
    CLI::App* csim = app.add_subcommand("simulate", "closed-loop acquisition simulation");
    csim->add_option("--qa-models", sim.qa_models, "QA model directory")->required();
    csim->add_option("--out", sim.out, "log directory")->required();
    csim->add_option("--qa-variant", sim.variant, "QA variant for the gate");
    csim->add_option("--qa-threshold", sim.qa_threshold, "QA acceptance threshold");
    csim->add_option("--locations", sim.locations, "probe locations");
    csim->add_option("--max-attempts", sim.max_attempts, "attempts per location");
    csim->add_option("--schedule", sim.schedule, "per-attempt insufficient probability, comma-separated");
    csim->add_option("--seed", sim.seed, "simulation seed");
    csim->add_option("--height", sim.cfg.frame_h, "frame height");
    csim->add_option("--width", sim.cfg.frame_w, "frame width");
    csim->add_option("--noise", sim.cfg.noise_level, "speckle intensity");

    SaliencyArgs sal;
    CLI::App* csal = app.add_subcommand("saliency", "guided Grad-CAM maps");
    csal->add_option("--manifest", sal.manifest, "dataset manifest")->required();
    csal->add_option("--model", sal.model, "diagnosis model file")->required();
    csal->add_option("--frame", sal.frame, "frame id")->required();
    csal->add_option("--class", sal.target, "target class (positive or control)");
    csal->add_option("--layer", sal.layer, "target conv layer (-1 = last)");
    csal->add_option("--out", sal.out, "output directory")->required();

    ReportArgs rep;
    CLI::App* crep = app.add_subcommand("report", "assemble a combined report");
    crep->add_option("--eval", rep.eval_dir, "eval output directory")->required();
    crep->add_option("--loop", rep.loop_log, "loop log to summarize");
    crep->add_option("--out", rep.out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) {
            gen.cfg.site = parse_site(gen_site);
            cmd_gen(gen);
        } else if (cbin->parsed()) {
            cmd_train_qa_bin(tr);
        } else if (cnd->parsed()) {
            // the adversarial trainer has its own tuned defaults
            if (cnd->count("--epochs") == 0) tr.epochs = GanOptions{}.epochs;
            if (cnd->count("--lr") == 0) tr.lr = GanOptions{}.learning_rate_r;
            cmd_train_qa_nd(tr);
        } else if (cdiag->parsed()) {
            cmd_train_diag(tr);
        } else if (ceval->parsed()) {
            cmd_eval(ev);
        } else if (csim->parsed()) {
            cmd_simulate(sim);
        } else if (csal->parsed()) {
            cmd_saliency(sal);
        } else if (crep->parsed()) {
            cmd_report(rep);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lusgate: %s\n", e.what());
        return 1;
    }
    return 0;
}
