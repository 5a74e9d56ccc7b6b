#include "lusgate/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "lusgate/errors.hpp"
#include "lusgate/pgm.hpp"
#include "lusgate/rng.hpp"

namespace lusgate {

const char* mode_name(InsufficientMode m) {
    switch (m) {
        case InsufficientMode::None: return "none";
        case InsufficientMode::Occluded: return "occluded";
        case InsufficientMode::OffTarget: return "off-target";
        case InsufficientMode::LowGain: return "low-gain";
        default: return "saturated-noise";
    }
}

void PhantomConfig::validate() const {
    if (frame_h < 16 || frame_w < 16 || frame_h > 1024 || frame_w > 1024)
        throw InvalidArgument("frame size must be within [16,1024] per side");
    if (n_patients_positive < 1 || n_patients_control < 1)
        throw InvalidArgument("patient counts must be at least 1");
    if (frames_per_patient < 1) throw InvalidArgument("frames_per_patient must be at least 1");
    if (!(insufficient_fraction >= 0.0 && insufficient_fraction <= 1.0))
        throw InvalidArgument("insufficient_fraction must lie in [0,1]");
    if (!(noise_level >= 0.0 && noise_level <= 1.2))
        throw InvalidArgument("noise_level must lie in [0,1.2]");
}

void FrameRecipe::validate() const {
    if (h < 16 || w < 16) throw InvalidArgument("frame size must be at least 16 px per side");
    if ((mode == InsufficientMode::None) != (quality == Quality::Sufficient))
        throw InvalidArgument("degradation mode present iff quality is insufficient");
    if (n_blines < 0 || n_blines > 3) throw InvalidArgument("B-line count must lie in [0,3]");
    if (diagnosis != Diagnosis::Positive && n_blines != 0)
        throw InvalidArgument("only positive frames carry B-lines");
    if (!(band_depth > 0.1 && band_depth < 0.6)) throw InvalidArgument("band depth out of range");
    if (!(noise_level >= 0.0 && noise_level <= 1.2)) throw InvalidArgument("noise_level out of range");
}

FrameLabel FrameRecipe::label() const { return {quality, diagnosis}; }

FrameRecipe make_frame_recipe(const PhantomConfig& config, Quality quality, InsufficientMode mode,
                              Diagnosis diagnosis, std::uint64_t frame_seed) {
    FrameRecipe r;
    r.quality = quality;
    r.mode = mode;
    r.diagnosis = diagnosis;
    r.h = config.frame_h;
    r.w = config.frame_w;
    r.noise_level = config.noise_level;
    r.seed = frame_seed;

    Rng rng(derive_seed(frame_seed, "geom"));
    r.fan_half_angle = 0.50 + 0.12 * rng.uniform();
    r.apex_shift = (rng.uniform() - 0.5) * 0.06;
    r.band_depth = 0.28 + 0.14 * rng.uniform();
    r.band_tilt = (rng.uniform() - 0.5) * 0.04;
    r.band_sigma = 1.0 + 0.4 * rng.uniform();
    r.band_gain = 0.90 + 0.10 * rng.uniform();
    if (diagnosis == Diagnosis::Positive) {
        r.n_blines = 1 + static_cast<int>(rng.below(3));
        for (auto& p : r.bline_pos) p = (rng.uniform() * 2.0 - 1.0) * 0.9;
        r.bline_sigma = 0.8 + 0.4 * rng.uniform();
        r.bline_gain = 0.38 + 0.12 * rng.uniform();
    }
    r.validate();
    return r;
}

namespace {

// 3x3 box smoothing with clamped edges
std::vector<double> box3(const std::vector<double>& in, int h, int w) {
    std::vector<double> out(in.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = std::clamp(x + dx, 0, w - 1);
                    sum += in[static_cast<std::size_t>(yy) * w + xx];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = sum / 9.0;
        }
    }
    return out;
}

std::vector<double> smoothed_noise_field(Rng& rng, int h, int w) {
    std::vector<double> u(static_cast<std::size_t>(h) * w);
    for (auto& v : u) v = rng.uniform() * 2.0 - 1.0;
    // box smoothing shrinks the spread; rescale so the field stays O(1)
    auto s = box3(u, h, w);
    for (auto& v : s) v *= 2.0;
    return s;
}

struct Blob {
    double cy, cx, ay, ax, gain;
};

}  // namespace

Tensor generate_frame(const FrameRecipe& r) {
    r.validate();
    const int h = r.h, w = r.w;
    const double cx = 0.5 * w + r.apex_shift * w;
    const double cy = -0.18 * h;
    const double rmax2 = (1.22 * h) * (1.22 * h);
    const double band_row = r.band_depth * h;
    const bool structured =
        r.mode == InsufficientMode::None || r.mode == InsufficientMode::LowGain ||
        r.mode == InsufficientMode::SaturatedNoise;

    // B-line columns resolved against the fan half-width at band depth
    std::array<double, 3> bcol{};
    if (structured && r.diagnosis == Diagnosis::Positive) {
        const double half_w = std::tan(r.fan_half_angle) * (band_row - cy);
        for (int i = 0; i < r.n_blines; ++i) bcol[i] = cx + r.bline_pos[i] * 0.78 * half_w;
    }

    // mode-specific layout, deterministic per recipe seed
    Rng mode_rng(derive_seed(r.seed, "mode"));
    Blob occluder{band_row + 0.02 * h * (mode_rng.uniform() - 0.5),
                  cx + 0.10 * w * (mode_rng.uniform() - 0.5), 0.30 * h, 0.50 * w, 0.80};
    std::array<Blob, 2> soft_blobs{};
    double drift_gain = 0.0;
    if (r.mode == InsufficientMode::OffTarget) {
        drift_gain = (mode_rng.uniform() - 0.5) * 0.5;
        for (auto& b : soft_blobs)
            b = {h * (0.2 + 0.6 * mode_rng.uniform()), w * (0.2 + 0.6 * mode_rng.uniform()),
                 h * (0.10 + 0.08 * mode_rng.uniform()), w * (0.10 + 0.08 * mode_rng.uniform()), 0.04};
    }

    Tensor img(h, w, 1);
    std::vector<char> in_fan(static_cast<std::size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y) {
        const double py = y + 0.5;
        for (int x = 0; x < w; ++x) {
            const double px = x + 0.5;
            const double dy = py - cy, dx = px - cx;
            if (std::abs(std::atan2(dx, dy)) > r.fan_half_angle || dx * dx + dy * dy > rmax2) continue;
            in_fan[static_cast<std::size_t>(y) * w + x] = 1;

            double v = 0.085 * (1.0 - 0.25 * py / h);
            if (structured) {
                const double center = band_row + r.band_tilt * (px - 0.5 * w);
                const double db = py - center;
                v += r.band_gain * std::exp(-db * db / (2.0 * r.band_sigma * r.band_sigma));
                const double as = 1.6 * r.band_sigma;
                for (int m = 2; m <= 4 && m * band_row < h - 1.0; ++m) {
                    const double da = py - (m * center);
                    v += (0.11 / (m - 1)) * std::exp(-da * da / (2.0 * as * as));
                }
                if (py >= band_row - 1.0) {
                    for (int i = 0; i < r.n_blines; ++i) {
                        const double dc = px - bcol[i];
                        v += r.bline_gain * std::exp(-dc * dc / (2.0 * r.bline_sigma * r.bline_sigma));
                    }
                }
            } else if (r.mode == InsufficientMode::Occluded) {
                const double ny = (py - occluder.cy) / occluder.ay;
                const double nx = (px - occluder.cx) / occluder.ax;
                v *= 1.0 - occluder.gain * std::exp(-(ny * ny + nx * nx));
            } else {  // off-target
                v *= 1.0 + drift_gain * (px / w - 0.5);
                for (const auto& b : soft_blobs) {
                    const double ny = (py - b.cy) / b.ay;
                    const double nx = (px - b.cx) / b.ax;
                    v += b.gain * std::exp(-(ny * ny + nx * nx));
                }
            }
            img.at(y, x, 0) = v;
        }
    }

    Rng noise_rng(derive_seed(r.seed, "speckle"));
    auto speckle = smoothed_noise_field(noise_rng, h, w);
    for (std::size_t i = 0; i < img.v.size(); ++i)
        img.v[i] *= std::max(1.0 + r.noise_level * speckle[i], 0.0);

    if (r.mode == InsufficientMode::LowGain) {
        for (auto& v : img.v) v = v * 0.10 + noise_rng.uniform() * 0.035;
    } else if (r.mode == InsufficientMode::SaturatedNoise) {
        auto burst = smoothed_noise_field(noise_rng, h, w);
        for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = 0.55 + 0.30 * img.v[i] + 0.38 * burst[i];
    }

    for (std::size_t i = 0; i < img.v.size(); ++i) {
        if (!in_fan[i]) {
            img.v[i] = 0.0;
            continue;
        }
        img.v[i] = std::clamp(img.v[i], 0.004, 1.0);
    }
    return img;
}

std::string PlannedFrame::frame_id(Site site) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%s_%05d", site_name(site), patient_id.c_str(), frame_index);
    return buf;
}

std::vector<PlannedFrame> dataset_plan(const PhantomConfig& config) {
    config.validate();

    std::vector<std::pair<std::string, Diagnosis>> roster;
    char buf[16];
    for (int i = 1; i <= config.n_patients_positive; ++i) {
        std::snprintf(buf, sizeof buf, "P%02d", i);
        roster.push_back({buf, Diagnosis::Positive});
    }
    for (int i = 1; i <= config.n_patients_control; ++i) {
        std::snprintf(buf, sizeof buf, "C%02d", i);
        roster.push_back({buf, Diagnosis::Control});
    }

    const int n_pat = static_cast<int>(roster.size());
    const int per_pat = config.frames_per_patient;
    const long long total = static_cast<long long>(n_pat) * per_pat;
    const long long total_insufficient = std::llround(config.insufficient_fraction * total);

    // spread insufficient counts evenly; the remainder lands on a seeded patient subset
    const long long base = total_insufficient / n_pat;
    const int rem = static_cast<int>(total_insufficient % n_pat);
    std::vector<int> extra(n_pat, 0);
    {
        std::vector<int> order(n_pat);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(config.seed, "alloc"));
        rng.shuffle(order);
        for (int j = 0; j < rem; ++j) extra[order[j]] = 1;
    }

    constexpr InsufficientMode kModes[] = {InsufficientMode::Occluded, InsufficientMode::OffTarget,
                                           InsufficientMode::LowGain, InsufficientMode::SaturatedNoise};
    std::vector<PlannedFrame> plan;
    plan.reserve(static_cast<std::size_t>(total));
    int mode_counter = 0;
    for (int p = 0; p < n_pat; ++p) {
        const int n_ins = static_cast<int>(std::min<long long>(base + extra[p], per_pat));
        std::vector<int> idx(per_pat);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(derive_seed(config.seed, "alloc-frames", p));
        rng.shuffle(idx);
        std::set<int> insufficient(idx.begin(), idx.begin() + n_ins);

        for (int f = 0; f < per_pat; ++f) {
            const bool ins = insufficient.count(f) > 0;
            InsufficientMode mode = InsufficientMode::None;
            if (ins) mode = kModes[mode_counter++ % 4];
            const auto fseed = derive_seed(config.seed, roster[p].first, f);
            plan.push_back({roster[p].first, f,
                            make_frame_recipe(config, ins ? Quality::Insufficient : Quality::Sufficient,
                                              mode, roster[p].second, fseed)});
        }
    }
    return plan;
}

Manifest generate_dataset(const PhantomConfig& config, const std::filesystem::path& out_dir) {
    auto plan = dataset_plan(config);

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "frames", ec);
    if (ec) throw IoError("cannot create output directory " + (out_dir / "frames").string() + ": " + ec.message());

    Manifest m;
    m.root = out_dir;
    for (const auto& pf : plan) {
        const auto fid = pf.frame_id(config.site);
        const auto rel = "frames/" + fid + ".pgm";
        write_pgm(tensor_to_image(generate_frame(pf.recipe)), out_dir / rel);
        m.records.push_back({fid, rel, pf.patient_id, config.site, pf.frame_index, pf.recipe.label()});
    }
    save_manifest(m, out_dir / "manifest.tsv");
    return m;
}

}  // namespace lusgate
